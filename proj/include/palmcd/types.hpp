#pragma once

#include <Eigen/Core>

namespace palmcd {

/// A₁ or ΔA: one code column per patch.
using CodeMatrix = Eigen::MatrixXd;

/// Atom matrix, one vectorized patch pattern per column. The constraint set
/// (nonnegative entries, unit ℓ2 columns) is established by
/// project_dictionary, not by construction.
struct Dictionary {
  Eigen::MatrixXd atoms;

  int atom_dim() const { return static_cast<int>(atoms.rows()); }
  int n_atoms() const { return static_cast<int>(atoms.cols()); }
};

/// Diagonal nonnegative scaling coupling atom energies across modalities.
struct ScalingMatrix {
  Eigen::VectorXd diag;

  static ScalingMatrix identity(int n) { return {Eigen::VectorXd::Ones(n)}; }
  Eigen::MatrixXd dense() const { return diag.asDiagonal(); }
};

}  // namespace palmcd
