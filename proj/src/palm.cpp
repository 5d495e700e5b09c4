#include "palmcd/palm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "palmcd/divergences.hpp"
#include "palmcd/errors.hpp"

namespace palmcd {

namespace {

constexpr double kLipSafety = 1.01;
constexpr double kSarFloor = 1e-15;

Eigen::MatrixXd scaled_codes(const SolverState& st) {  // Ā₁ = S A₁
  return st.s.diag.asDiagonal() * st.a1;
}

Eigen::MatrixXd coupled_atoms(const SolverState& st) {  // D₁S
  return st.d1.atoms * st.s.diag.asDiagonal();
}

/// ‖BᵀB‖ = ‖B‖², power iteration warm-started from v (resized on demand).
double gram_norm(const Eigen::MatrixXd& b, Eigen::VectorXd& v) {
  if (v.size() != b.cols()) {
    v = Eigen::VectorXd::Ones(b.cols());
  }
  LinearOp op = [&b](const Eigen::VectorXd& x) { return (b.transpose() * (b * x)).eval(); };
  return spectral_norm_warm(op, op, v);
}

/// ‖D₁ᵀD₁ A₁A₁ᵀ‖ for the scaling block.
double scaling_op_norm(const Eigen::MatrixXd& d1, const Eigen::MatrixXd& a1,
                       Eigen::VectorXd& v) {
  if (v.size() != d1.cols()) v = Eigen::VectorXd::Ones(d1.cols());
  LinearOp apply = [&](const Eigen::VectorXd& x) {
    return (d1.transpose() * (d1 * (a1 * (a1.transpose() * x)))).eval();
  };
  LinearOp adjoint = [&](const Eigen::VectorXd& x) {
    return (a1 * (a1.transpose() * (d1.transpose() * (d1 * x)))).eval();
  };
  return spectral_norm_warm(apply, adjoint, v);
}

struct PowerVecs {
  Eigen::VectorXd coupled;  // for ‖(D₁S)ᵀD₁S‖
  Eigen::VectorXd d2gram;   // for ‖D₂ᵀD₂‖
  Eigen::VectorXd abar1;    // for ‖Ā₁Ā₁ᵀ‖
  Eigen::VectorXd abar2;    // for ‖Ā₂Ā₂ᵀ‖
  Eigen::VectorXd scaling;  // for ‖D₁ᵀD₁A₁A₁ᵀ‖
};

struct Ctx {
  const SolverConfig& cfg;
  const PatchMatrix& p1;
  const PatchMatrix& p2;
  PowerVecs& pv;
};

Eigen::MatrixXd pseudo_huber_grad(const Eigen::MatrixXd& t, double eps) {
  return (t.array() / (t.array().square() + eps * eps).sqrt()).matrix();
}

CodeMatrix update_code_impl(const SolverState& st, Ctx& ctx, double* lip_out) {
  const SolverConfig& cfg = ctx.cfg;
  const Eigen::MatrixXd b = coupled_atoms(st);
  const Eigen::MatrixXd a2 = st.a1 + st.da;

  double lip = cfg.lambda / cfg.smoothing.eps_code;
  if (cfg.sigma1_sq > 0.0) lip += cfg.sigma1_sq * kLipSafety * gram_norm(b, ctx.pv.coupled);
  if (cfg.sigma2_sq > 0.0)
    lip += cfg.sigma2_sq * kLipSafety * gram_norm(st.d2.atoms, ctx.pv.d2gram);
  if (lip <= 0.0) throw ParamError("code update: zero Lipschitz constant (all weights zero)");
  if (lip_out) *lip_out = lip;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(st.a1.rows(), st.a1.cols());
  if (cfg.sigma1_sq > 0.0) g += cfg.sigma1_sq * (b.transpose() * (b * st.a1 - ctx.p1));
  if (cfg.sigma2_sq > 0.0)
    g += cfg.sigma2_sq * (st.d2.atoms.transpose() * (st.d2.atoms * a2 - ctx.p2));
  if (cfg.lambda > 0.0) g += cfg.lambda * pseudo_huber_grad(a2, cfg.smoothing.eps_code);

  return soft_threshold_nonneg(st.a1 - g / lip, cfg.lambda / lip);
}

CodeMatrix update_delta_code_impl(const SolverState& st, Ctx& ctx, double* lip_out) {
  const SolverConfig& cfg = ctx.cfg;
  const Eigen::MatrixXd a2 = st.a1 + st.da;

  double lip = cfg.lambda / cfg.smoothing.eps_code;
  if (cfg.sigma2_sq > 0.0)
    lip += cfg.sigma2_sq * kLipSafety * gram_norm(st.d2.atoms, ctx.pv.d2gram);
  if (lip <= 0.0)
    throw ParamError("code-change update: zero Lipschitz constant (all weights zero)");
  if (lip_out) *lip_out = lip;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(st.da.rows(), st.da.cols());
  if (cfg.sigma2_sq > 0.0)
    g += cfg.sigma2_sq * (st.d2.atoms.transpose() * (st.d2.atoms * a2 - ctx.p2));
  if (cfg.lambda > 0.0) g += cfg.lambda * pseudo_huber_grad(a2, cfg.smoothing.eps_code);

  return group_soft_threshold(st.da - g / lip, cfg.gamma / lip);
}

Dictionary update_dictionary_impl(const SolverState& st, Ctx& ctx, int which,
                                  std::vector<std::string>* warnings, double* lip_out) {
  const SolverConfig& cfg = ctx.cfg;
  const Eigen::MatrixXd abar = which == 1 ? scaled_codes(st) : (st.a1 + st.da).eval();
  const Dictionary& d = which == 1 ? st.d1 : st.d2;
  const PatchMatrix& p = which == 1 ? ctx.p1 : ctx.p2;
  const double sigma_sq = which == 1 ? cfg.sigma1_sq : cfg.sigma2_sq;

  if (lip_out) *lip_out = 0.0;
  Eigen::VectorXd& warm = which == 1 ? ctx.pv.abar1 : ctx.pv.abar2;
  const double nrm = sigma_sq > 0.0 ? gram_norm(abar.transpose(), warm) : 0.0;
  const double lip = sigma_sq * kLipSafety * nrm;
  if (lip <= 0.0) {
    if (warnings)
      warnings->push_back("dictionary " + std::to_string(which) +
                          " update skipped: codes are zero");
    return d;
  }
  if (lip_out) *lip_out = lip;

  const Eigen::MatrixXd g = sigma_sq * ((d.atoms * abar - p) * abar.transpose());
  std::vector<int> dead;
  Dictionary out{project_dictionary_atoms(d.atoms - g / lip, &dead)};
  if (!dead.empty() && warnings)
    warnings->push_back("dictionary " + std::to_string(which) + ": " +
                        std::to_string(dead.size()) + " dead atom(s) reset");
  return out;
}

ScalingMatrix update_scaling_impl(const SolverState& st, Ctx& ctx,
                                  std::vector<std::string>* warnings, double* lip_out) {
  const SolverConfig& cfg = ctx.cfg;
  if (lip_out) *lip_out = 0.0;
  const double nrm = cfg.sigma1_sq > 0.0
                         ? scaling_op_norm(st.d1.atoms, st.a1, ctx.pv.scaling)
                         : 0.0;
  const double lip = cfg.sigma1_sq * kLipSafety * nrm;
  if (lip <= 0.0) {
    if (warnings) warnings->push_back("scaling update skipped: codes are zero");
    return st.s;
  }
  if (lip_out) *lip_out = lip;

  const Eigen::MatrixXd r1 = st.d1.atoms * scaled_codes(st) - ctx.p1;
  const Eigen::MatrixXd g =
      cfg.sigma1_sq * (st.d1.atoms.transpose() * r1 * st.a1.transpose());
  return project_scaling(Eigen::MatrixXd(st.s.dense() - g / lip));
}

Raster update_latent_impl(const SolverState& st, Ctx& ctx, int which, const Raster& y,
                          double* lip_out) {
  const SolverConfig& cfg = ctx.cfg;
  const Raster& x = which == 1 ? st.x1 : st.x2;
  const PatchGrid& grid = which == 1 ? st.grid1 : st.grid2;
  const PatchMatrix& p = which == 1 ? ctx.p1 : ctx.p2;
  const double sigma_sq = which == 1 ? cfg.sigma1_sq : cfg.sigma2_sq;
  const double tau = which == 1 ? cfg.tau1 : cfg.tau2;
  const double eps = which == 1 ? cfg.smoothing.eps_tv_1 : cfg.smoothing.eps_tv_2;

  if (y.width != x.width || y.height != x.height || y.bands != x.bands)
    throw GeometryError("observed image does not match latent dimensions");

  double lip = sigma_sq * max_coverage(grid) + 8.0 * tau / eps;
  if (lip_out) *lip_out = lip;
  if (lip <= 0.0) {
    // no coupling and no TV: the prox collapses onto the observation
    Raster out = data_prox(y, x, 1e-12);
    if (y.modality == Modality::Sar)
      for (double& v : out.data) v = std::max(v, kSarFloor);
    return out;
  }

  Raster grad(x.width, x.height, x.bands);
  if (sigma_sq > 0.0) {
    Eigen::MatrixXd pred;
    if (which == 1)
      pred = st.d1.atoms * scaled_codes(st);
    else
      pred = st.d2.atoms * (st.a1 + st.da);
    grad = adjoint_accumulate(p - pred, grid);
    for (double& v : grad.data) v *= sigma_sq;
  }
  if (tau > 0.0) {
    const auto [tv, tv_grad] = tv_value_grad(x, eps, tau);
    (void)tv;
    for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += tv_grad.data[i];
  }

  Raster u = x;
  for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] -= grad.data[i] / lip;
  Raster out = data_prox(y, u, lip);
  if (y.modality == Modality::Sar)
    for (double& v : out.data) v = std::max(v, kSarFloor);
  out.modality = x.modality;
  return out;
}

void check_state_invariants(const SolverState& st) {
  if (st.a1.size() > 0 && st.a1.minCoeff() < 0.0)
    throw InvariantError("A1 has negative entries");
  if (st.s.diag.size() > 0 && st.s.diag.minCoeff() < 0.0)
    throw InvariantError("scaling diagonal has negative entries");
  for (const Dictionary* d : {&st.d1, &st.d2}) {
    if (d->atoms.size() == 0) continue;
    if (d->atoms.minCoeff() < 0.0) throw InvariantError("dictionary has negative entries");
    for (Eigen::Index j = 0; j < d->atoms.cols(); ++j)
      if (std::abs(d->atoms.col(j).norm() - 1.0) > 1e-9)
        throw InvariantError("dictionary atom is not unit norm");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (lambda < 0.0 || gamma < 0.0 || sigma1_sq < 0.0 || sigma2_sq < 0.0 || tau1 < 0.0 ||
      tau2 < 0.0)
    throw ParamError("regularization weights must be nonnegative");
  if (smoothing.eps_code <= 0.0 || smoothing.eps_tv_1 <= 0.0 || smoothing.eps_tv_2 <= 0.0)
    throw ParamError("smoothing widths must be positive");
  if (n_atoms < 1) throw ParamError("n_atoms must be >= 1");
  if (patch_size < 2) throw ParamError("patch_size must be >= 2");
  if (stride < 1) throw ParamError("stride must be >= 1");
  if (max_iters < 0) throw ParamError("max_iters must be >= 0");
  if (rel_tol <= 0.0) throw ParamError("rel_tol must be positive");
}

double coupling_value(const SolverState& st, const SolverConfig& cfg) {
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  const Eigen::MatrixXd a2 = st.a1 + st.da;

  double h = 0.0;
  if (cfg.sigma1_sq > 0.0)
    h += 0.5 * cfg.sigma1_sq * (coupled_atoms(st) * st.a1 - p1).squaredNorm();
  if (cfg.sigma2_sq > 0.0) h += 0.5 * cfg.sigma2_sq * (st.d2.atoms * a2 - p2).squaredNorm();
  if (cfg.lambda > 0.0)
    h += cfg.lambda * pseudo_huber_value_grad(a2, cfg.smoothing.eps_code).first;
  if (cfg.tau1 > 0.0) h += tv_value(st.x1, cfg.smoothing.eps_tv_1, cfg.tau1);
  if (cfg.tau2 > 0.0) h += tv_value(st.x2, cfg.smoothing.eps_tv_2, cfg.tau2);
  return h;
}

double objective(const SolverState& st, const Raster& y1, const Raster& y2,
                 const SolverConfig& cfg) {
  check_state_invariants(st);
  double j = data_divergence(y1, st.x1) + data_divergence(y2, st.x2);
  j += coupling_value(st, cfg);
  if (cfg.lambda > 0.0) j += cfg.lambda * st.a1.cwiseAbs().sum();
  if (cfg.gamma > 0.0) j += cfg.gamma * st.da.colwise().norm().sum();
  return j;
}

CodeMatrix grad_code(const SolverState& st, const SolverConfig& cfg) {
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  const Eigen::MatrixXd b = coupled_atoms(st);
  const Eigen::MatrixXd a2 = st.a1 + st.da;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(st.a1.rows(), st.a1.cols());
  if (cfg.sigma1_sq > 0.0) g += cfg.sigma1_sq * (b.transpose() * (b * st.a1 - p1));
  if (cfg.sigma2_sq > 0.0)
    g += cfg.sigma2_sq * (st.d2.atoms.transpose() * (st.d2.atoms * a2 - p2));
  if (cfg.lambda > 0.0) g += cfg.lambda * pseudo_huber_grad(a2, cfg.smoothing.eps_code);
  return g;
}

CodeMatrix grad_delta_code(const SolverState& st, const SolverConfig& cfg) {
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  const Eigen::MatrixXd a2 = st.a1 + st.da;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(st.da.rows(), st.da.cols());
  if (cfg.sigma2_sq > 0.0)
    g += cfg.sigma2_sq * (st.d2.atoms.transpose() * (st.d2.atoms * a2 - p2));
  if (cfg.lambda > 0.0) g += cfg.lambda * pseudo_huber_grad(a2, cfg.smoothing.eps_code);
  return g;
}

Eigen::MatrixXd grad_dictionary(const SolverState& st, const SolverConfig& cfg, int which) {
  if (which != 1 && which != 2) throw ParamError("which must be 1 or 2");
  const Raster& x = which == 1 ? st.x1 : st.x2;
  const PatchGrid& grid = which == 1 ? st.grid1 : st.grid2;
  const PatchMatrix p = extract_patches(x, grid);
  const Eigen::MatrixXd abar = which == 1 ? scaled_codes(st) : (st.a1 + st.da).eval();
  const Eigen::MatrixXd& atoms = which == 1 ? st.d1.atoms : st.d2.atoms;
  const double sigma_sq = which == 1 ? cfg.sigma1_sq : cfg.sigma2_sq;
  if (sigma_sq == 0.0) return Eigen::MatrixXd::Zero(atoms.rows(), atoms.cols());
  return sigma_sq * ((atoms * abar - p) * abar.transpose());
}

Eigen::MatrixXd grad_scaling(const SolverState& st, const SolverConfig& cfg) {
  const int n = static_cast<int>(st.s.diag.size());
  if (cfg.sigma1_sq == 0.0) return Eigen::MatrixXd::Zero(n, n);
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const Eigen::MatrixXd r1 = st.d1.atoms * scaled_codes(st) - p1;
  return cfg.sigma1_sq * (st.d1.atoms.transpose() * r1 * st.a1.transpose());
}

Raster grad_latent(const SolverState& st, const SolverConfig& cfg, int which) {
  if (which != 1 && which != 2) throw ParamError("which must be 1 or 2");
  const Raster& x = which == 1 ? st.x1 : st.x2;
  const PatchGrid& grid = which == 1 ? st.grid1 : st.grid2;
  const double sigma_sq = which == 1 ? cfg.sigma1_sq : cfg.sigma2_sq;
  const double tau = which == 1 ? cfg.tau1 : cfg.tau2;
  const double eps = which == 1 ? cfg.smoothing.eps_tv_1 : cfg.smoothing.eps_tv_2;

  Raster g(x.width, x.height, x.bands);
  if (sigma_sq > 0.0) {
    const PatchMatrix p = extract_patches(x, grid);
    Eigen::MatrixXd pred;
    if (which == 1)
      pred = st.d1.atoms * scaled_codes(st);
    else
      pred = st.d2.atoms * (st.a1 + st.da);
    g = adjoint_accumulate(p - pred, grid);
    for (double& v : g.data) v *= sigma_sq;
  }
  if (tau > 0.0) {
    const auto [value, tv_grad] = tv_value_grad(x, eps, tau);
    (void)value;
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += tv_grad.data[i];
  }
  return g;
}

double grad_check_harness(const SolverState& st, Block block, const SolverConfig& cfg) {
  SolverState probe = st;

  // gather the analytic gradient and a mutable view of the block variable
  std::vector<double*> coords;
  std::vector<double> analytic;
  auto collect_matrix = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& g) {
    coords.reserve(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) coords.push_back(m.data() + i);
    analytic.assign(g.data(), g.data() + g.size());
  };

  switch (block) {
    case Block::Code:
      collect_matrix(probe.a1, grad_code(st, cfg));
      break;
    case Block::DeltaCode:
      collect_matrix(probe.da, grad_delta_code(st, cfg));
      break;
    case Block::Dictionary1:
      collect_matrix(probe.d1.atoms, grad_dictionary(st, cfg, 1));
      break;
    case Block::Dictionary2:
      collect_matrix(probe.d2.atoms, grad_dictionary(st, cfg, 2));
      break;
    case Block::Scaling: {
      // S is a full-matrix block variable; probe a dense copy of it
      Eigen::MatrixXd g = grad_scaling(st, cfg);
      const int n = static_cast<int>(st.s.diag.size());
      analytic.assign(g.data(), g.data() + g.size());
      double max_an = 1e-12;
      for (double v : analytic) max_an = std::max(max_an, std::abs(v));
      double max_err = 0.0;
      for (int col = 0; col < n; ++col)
        for (int row = 0; row < n; ++row) {
          Eigen::MatrixXd dense = st.s.dense();
          const double h = 1e-6 * std::max(1.0, std::abs(dense(row, col)));
          auto eval_at = [&](double delta) {
            Eigen::MatrixXd perturbed = st.s.dense();
            perturbed(row, col) += delta;
            SolverState tmp = st;
            // coupling uses D₁S only; absorb the dense perturbation there
            tmp.d1.atoms = st.d1.atoms * perturbed;
            tmp.s = ScalingMatrix::identity(n);
            return coupling_value(tmp, cfg);
          };
          const double fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
          max_err = std::max(max_err, std::abs(fd - g(row, col)) / max_an);
        }
      return max_err;
    }
    case Block::Latent1: {
      coords.reserve(probe.x1.data.size());
      for (double& v : probe.x1.data) coords.push_back(&v);
      const Raster g = grad_latent(st, cfg, 1);
      analytic.assign(g.data.begin(), g.data.end());
      break;
    }
    case Block::Latent2: {
      coords.reserve(probe.x2.data.size());
      for (double& v : probe.x2.data) coords.push_back(&v);
      const Raster g = grad_latent(st, cfg, 2);
      analytic.assign(g.data.begin(), g.data.end());
      break;
    }
  }

  double max_an = 1e-12;
  for (double v : analytic) max_an = std::max(max_an, std::abs(v));
  double max_err = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double orig = *coords[i];
    const double h = 1e-6 * std::max(1.0, std::abs(orig));
    *coords[i] = orig + h;
    const double plus = coupling_value(probe, cfg);
    *coords[i] = orig - h;
    const double minus = coupling_value(probe, cfg);
    *coords[i] = orig;
    const double fd = (plus - minus) / (2.0 * h);
    max_err = std::max(max_err, std::abs(fd - analytic[i]) / max_an);
  }
  return max_err;
}

CodeMatrix update_code(const SolverState& st, const SolverConfig& cfg, IterationStats* stats) {
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  PowerVecs pv;
  Ctx ctx{cfg, p1, p2, pv};
  double lip = 0.0;
  CodeMatrix out = update_code_impl(st, ctx, &lip);
  if (stats) stats->l_a1 = lip;
  return out;
}

CodeMatrix update_delta_code(const SolverState& st, const SolverConfig& cfg,
                             IterationStats* stats) {
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  PowerVecs pv;
  Ctx ctx{cfg, p1, p2, pv};
  double lip = 0.0;
  CodeMatrix out = update_delta_code_impl(st, ctx, &lip);
  if (stats) stats->l_da = lip;
  return out;
}

Dictionary update_dictionary(const SolverState& st, const SolverConfig& cfg, int which,
                             std::vector<std::string>* warnings, IterationStats* stats) {
  if (which != 1 && which != 2) throw ParamError("which must be 1 or 2");
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  PowerVecs pv;
  Ctx ctx{cfg, p1, p2, pv};
  double lip = 0.0;
  Dictionary out = update_dictionary_impl(st, ctx, which, warnings, &lip);
  if (stats) (which == 1 ? stats->l_d1 : stats->l_d2) = lip;
  return out;
}

ScalingMatrix update_scaling(const SolverState& st, const SolverConfig& cfg,
                             std::vector<std::string>* warnings, IterationStats* stats) {
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  PowerVecs pv;
  Ctx ctx{cfg, p1, p2, pv};
  double lip = 0.0;
  ScalingMatrix out = update_scaling_impl(st, ctx, warnings, &lip);
  if (stats) stats->l_s = lip;
  return out;
}

Raster update_latent(const SolverState& st, const SolverConfig& cfg, int which,
                     const Raster& y, IterationStats* stats) {
  if (which != 1 && which != 2) throw ParamError("which must be 1 or 2");
  const PatchMatrix p1 = extract_patches(st.x1, st.grid1);
  const PatchMatrix p2 = extract_patches(st.x2, st.grid2);
  PowerVecs pv;
  Ctx ctx{cfg, p1, p2, pv};
  double lip = 0.0;
  Raster out = update_latent_impl(st, ctx, which, y, &lip);
  if (stats) (which == 1 ? stats->l_x1 : stats->l_x2) = lip;
  return out;
}

SolverState initialize(const Raster& y1, const Raster& y2, const PatchGrid& g1,
                       const PatchGrid& g2, const SolverConfig& cfg) {
  cfg.validate();
  y1.validate();
  y2.validate();
  if (g1.patch_count() != g2.patch_count())
    throw GeometryError("grids are not homologous (patch counts differ)");
  const int n_p = g1.patch_count();
  if (cfg.n_atoms > n_p)
    throw InitError("n_atoms (" + std::to_string(cfg.n_atoms) + ") exceeds patch count (" +
                    std::to_string(n_p) + ")");

  SolverState st;
  st.grid1 = g1;
  st.grid2 = g2;
  st.x1 = y1;
  st.x2 = y2;
  if (y1.modality == Modality::Sar)
    for (double& v : st.x1.data) v = std::max(v, 1e-6);
  if (y2.modality == Modality::Sar)
    for (double& v : st.x2.data) v = std::max(v, 1e-6);

  const PatchMatrix p1 = extract_patches(st.x1, g1);
  const PatchMatrix p2 = extract_patches(st.x2, g2);

  // homologous patch pairs at seeded anchors, drawn without replacement
  std::mt19937_64 gen(cfg.seed);
  std::vector<int> idx(n_p);
  for (int i = 0; i < n_p; ++i) idx[i] = i;
  for (int j = 0; j < cfg.n_atoms; ++j) {
    const std::uint64_t r = gen() % static_cast<std::uint64_t>(n_p - j);
    std::swap(idx[j], idx[j + static_cast<int>(r)]);
  }

  Eigen::MatrixXd d1(p1.rows(), cfg.n_atoms), d2(p2.rows(), cfg.n_atoms);
  for (int j = 0; j < cfg.n_atoms; ++j) {
    d1.col(j) = p1.col(idx[j]);
    d2.col(j) = p2.col(idx[j]);
  }
  std::vector<int> dead1, dead2;
  st.d1 = Dictionary{project_dictionary_atoms(d1, &dead1)};
  st.d2 = Dictionary{project_dictionary_atoms(d2, &dead2)};
  if (!dead1.empty())
    st.warnings.push_back("initialize: " + std::to_string(dead1.size()) +
                          " dead atom(s) in dictionary 1");
  if (!dead2.empty())
    st.warnings.push_back("initialize: " + std::to_string(dead2.size()) +
                          " dead atom(s) in dictionary 2");

  st.a1.resize(cfg.n_atoms, n_p);
  for (Eigen::Index i = 0; i < st.a1.size(); ++i)
    st.a1.data()[i] = 0.01 * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
  st.da = Eigen::MatrixXd::Zero(cfg.n_atoms, n_p);
  st.s = ScalingMatrix::identity(cfg.n_atoms);
  return st;
}

SolverState run(const Raster& y1, const Raster& y2, const SolverConfig& cfg,
                const std::string& trace_path) {
  cfg.validate();
  y1.validate();
  y2.validate();

  // cfg.patch_size / cfg.stride are expressed on the coarser grid
  PatchGrid g1, g2;
  if (y2.width >= y1.width) {
    std::tie(g1, g2) = make_coupled_grids(dims_of(y1), dims_of(y2), cfg.patch_size, cfg.stride);
  } else {
    std::tie(g2, g1) = make_coupled_grids(dims_of(y2), dims_of(y1), cfg.patch_size, cfg.stride);
  }

  SolverState st = initialize(y1, y2, g1, g2, cfg);
  PatchMatrix p1 = extract_patches(st.x1, g1);
  PatchMatrix p2 = extract_patches(st.x2, g2);
  PowerVecs pv;

  double prev = objective(st, y1, y2, cfg);
  st.objective_trace.push_back(prev);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    IterationStats is;
    Ctx ctx{cfg, p1, p2, pv};
    st.a1 = update_code_impl(st, ctx, &is.l_a1);
    st.da = update_delta_code_impl(st, ctx, &is.l_da);
    st.d1 = update_dictionary_impl(st, ctx, 1, &st.warnings, &is.l_d1);
    st.d2 = update_dictionary_impl(st, ctx, 2, &st.warnings, &is.l_d2);
    st.s = update_scaling_impl(st, ctx, &st.warnings, &is.l_s);
    st.x1 = update_latent_impl(st, ctx, 1, y1, &is.l_x1);
    p1 = extract_patches(st.x1, g1);
    st.x2 = update_latent_impl(st, ctx, 2, y2, &is.l_x2);
    p2 = extract_patches(st.x2, g2);

    const double j = objective(st, y1, y2, cfg);
    if (!std::isfinite(j))
      throw NumericalError("objective is not finite at iteration " + std::to_string(k));
    st.objective_trace.push_back(j);
    is.objective = j;
    st.stats.push_back(is);
    st.iter = k;

    if (std::abs(j - prev) <= cfg.rel_tol * std::abs(prev)) break;
    prev = j;
  }

  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::trunc);
    if (!out) throw IoError("cannot create trace file '" + trace_path + "'");
    out << "iter,objective,L_A1,L_dA,L_D1,L_D2,L_S,L_X1,L_X2\n";
    char line[512];
    for (std::size_t k = 0; k < st.stats.size(); ++k) {
      const IterationStats& is = st.stats[k];
      std::snprintf(line, sizeof(line),
                    "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k + 1,
                    is.objective, is.l_a1, is.l_da, is.l_d1, is.l_d2, is.l_s, is.l_x1,
                    is.l_x2);
      out << line;
    }
  }
  return st;
}

}  // namespace palmcd
