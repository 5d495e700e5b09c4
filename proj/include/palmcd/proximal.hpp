#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "palmcd/raster.hpp"
#include "palmcd/types.hpp"

namespace palmcd {

struct SmoothingParams {
  double eps_code = 1e-3;  // pseudo-Huber width for the ℓ1 term on codes
  double eps_tv_1 = 1e-3;  // TV smoothing width, image 1
  double eps_tv_2 = 1e-3;  // TV smoothing width, image 2
};

/// prox of t·‖·‖₁ + nonnegativity: elementwise max(a − t, 0).
Eigen::MatrixXd soft_threshold_nonneg(const Eigen::MatrixXd& a, double t);

/// Column-wise group shrinkage: zero the column if its norm is ≤ t,
/// otherwise scale it by (1 − t/‖column‖).
Eigen::MatrixXd group_soft_threshold(const Eigen::MatrixXd& da, double t);

/// Projects each column onto the unit-norm nonnegative sphere: clamp
/// negatives, divide by the ℓ2 norm. A column whose positive part vanishes is
/// replaced by the first canonical basis vector and its index reported
/// through dead_atoms (a dead-atom event).
Eigen::MatrixXd project_dictionary_atoms(const Eigen::MatrixXd& d,
                                         std::vector<int>* dead_atoms = nullptr);
Dictionary project_dictionary(const Dictionary& d, std::vector<int>* dead_atoms = nullptr);

/// Projects a square matrix onto nonnegative diagonal matrices.
ScalingMatrix project_scaling(const Eigen::MatrixXd& s);
ScalingMatrix project_scaling(const ScalingMatrix& s);

/// value Σ √(t²+ε²)−ε and its elementwise gradient t/√(t²+ε²).
std::pair<double, Eigen::MatrixXd> pseudo_huber_value_grad(const Eigen::MatrixXd& t, double eps);

/// Forward differences with Neumann boundary (per band), and the exact
/// negative adjoint divergence: ⟨∇x, (fx,fy)⟩ = −⟨x, div(fx,fy)⟩.
void forward_differences(const Raster& x, Raster& dx, Raster& dy);
Raster divergence(const Raster& fx, const Raster& fy);

/// Smoothed anisotropic TV: value τ·Σ ph(∇x) and gradient −τ·div(∇x/√(∇x²+ε²)).
/// The gradient is (8τ/ε)-Lipschitz.
std::pair<double, Raster> tv_value_grad(const Raster& x, double eps, double tau);
double tv_value(const Raster& x, double eps, double tau);

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Largest singular value via power iteration on the normal operator,
/// started from a seeded random vector. Returns the raw estimate; callers
/// assembling Lipschitz constants apply their own safety factor. Sets
/// *converged=false when 500 iterations were not enough.
double spectral_norm(const LinearOp& apply, const LinearOp& apply_adjoint, int dim,
                     std::uint64_t seed, bool* converged = nullptr);

/// Same, warm-started from (and updating) v.
double spectral_norm_warm(const LinearOp& apply, const LinearOp& apply_adjoint,
                          Eigen::VectorXd& v, bool* converged = nullptr);

}  // namespace palmcd
