#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "palmcd/patches.hpp"
#include "palmcd/proximal.hpp"
#include "palmcd/raster.hpp"
#include "palmcd/types.hpp"

namespace palmcd {

struct SolverConfig {
  double lambda = 0.1;     // ℓ1 weight on the codes
  double gamma = 0.5;      // group-lasso weight on the code change
  double sigma1_sq = 1.0;  // coupling strength, image 1
  double sigma2_sq = 1.0;  // coupling strength, image 2
  double tau1 = 0.05;      // TV weight, image 1
  double tau2 = 0.05;      // TV weight, image 2
  SmoothingParams smoothing;
  int n_atoms = 256;
  int patch_size = 8;  // K, expressed on the coarser grid
  int stride = 2;      // likewise
  int max_iters = 300;
  double rel_tol = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Block { Code, DeltaCode, Dictionary1, Dictionary2, Scaling, Latent1, Latent2 };

struct IterationStats {
  double objective = 0.0;
  double l_a1 = 0.0, l_da = 0.0, l_d1 = 0.0, l_d2 = 0.0, l_s = 0.0, l_x1 = 0.0, l_x2 = 0.0;
};

struct SolverState {
  Raster x1, x2;
  Dictionary d1, d2;
  ScalingMatrix s;
  CodeMatrix a1, da;
  PatchGrid grid1, grid2;
  int iter = 0;
  std::vector<double> objective_trace;
  std::vector<IterationStats> stats;
  std::vector<std::string> warnings;
};

/// Full objective: data-fitting terms, coupled patch quadratics, smoothed TV,
/// exact ℓ1 on A₁, pseudo-Huber surrogate of ℓ1 on A₁+ΔA, group lasso on ΔA.
/// Constraint sets contribute zero; their violation raises InvariantError.
double objective(const SolverState& st, const Raster& y1, const Raster& y2,
                 const SolverConfig& cfg);

/// The smooth coupling function (quadratics + pseudo-Huber ℓ1 surrogate +
/// smoothed TV) that the block gradients differentiate.
double coupling_value(const SolverState& st, const SolverConfig& cfg);

CodeMatrix grad_code(const SolverState& st, const SolverConfig& cfg);
CodeMatrix grad_delta_code(const SolverState& st, const SolverConfig& cfg);
Eigen::MatrixXd grad_dictionary(const SolverState& st, const SolverConfig& cfg, int which);
Eigen::MatrixXd grad_scaling(const SolverState& st, const SolverConfig& cfg);
Raster grad_latent(const SolverState& st, const SolverConfig& cfg, int which);

/// Compares the analytic gradient of one block against central finite
/// differences of coupling_value. Returns max |fd − analytic| over the block,
/// normalized by the largest analytic entry.
double grad_check_harness(const SolverState& st, Block block, const SolverConfig& cfg);

// Single PALM block updates. Each takes a proximal-gradient step with the
// block's Lipschitz constant (spectral norms estimated by power iteration and
// inflated by the 1.01 safety factor).
CodeMatrix update_code(const SolverState& st, const SolverConfig& cfg,
                       IterationStats* stats = nullptr);
CodeMatrix update_delta_code(const SolverState& st, const SolverConfig& cfg,
                             IterationStats* stats = nullptr);
Dictionary update_dictionary(const SolverState& st, const SolverConfig& cfg, int which,
                             std::vector<std::string>* warnings = nullptr,
                             IterationStats* stats = nullptr);
ScalingMatrix update_scaling(const SolverState& st, const SolverConfig& cfg,
                             std::vector<std::string>* warnings = nullptr,
                             IterationStats* stats = nullptr);
Raster update_latent(const SolverState& st, const SolverConfig& cfg, int which,
                     const Raster& y, IterationStats* stats = nullptr);

/// Dictionaries start from homologous patch pairs sampled without
/// replacement, codes from small uniform values, ΔA from zero, S from the
/// identity, latents from the observations (floored at 1e-6 for SAR).
SolverState initialize(const Raster& y1, const Raster& y2, const PatchGrid& g1,
                       const PatchGrid& g2, const SolverConfig& cfg);

/// Runs the full block sweep A₁, ΔA, D₁, D₂, S, X₁, X₂ until the relative
/// objective change drops below rel_tol or max_iters is reached. When
/// trace_path is nonempty, writes one CSV row per iteration:
/// iter,objective,L_A1,L_dA,L_D1,L_D2,L_S,L_X1,L_X2
SolverState run(const Raster& y1, const Raster& y2, const SolverConfig& cfg,
                const std::string& trace_path = "");

}  // namespace palmcd
