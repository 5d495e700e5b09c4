#include "palmcd/proximal.hpp"

#include <cmath>
#include <limits>

#include "palmcd/errors.hpp"
#include "palmcd/rng.hpp"

namespace palmcd {

Eigen::MatrixXd soft_threshold_nonneg(const Eigen::MatrixXd& a, double t) {
  if (t < 0.0) throw ParamError("threshold must be nonnegative");
  return (a.array() - t).max(0.0);
}

Eigen::MatrixXd group_soft_threshold(const Eigen::MatrixXd& da, double t) {
  if (t < 0.0) throw ParamError("threshold must be nonnegative");
  if (t == 0.0) return da;
  Eigen::MatrixXd out(da.rows(), da.cols());
  for (Eigen::Index i = 0; i < da.cols(); ++i) {
    const double nrm = da.col(i).norm();
    if (nrm <= t)
      out.col(i).setZero();
    else
      out.col(i) = (1.0 - t / nrm) * da.col(i);
  }
  return out;
}

Eigen::MatrixXd project_dictionary_atoms(const Eigen::MatrixXd& d, std::vector<int>* dead_atoms) {
  Eigen::MatrixXd out = d.cwiseMax(0.0);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double n2 = out.col(j).squaredNorm();
    if (n2 == 0.0) {
      // projection undefined at the origin; fall back to a fixed unit atom
      out.col(j).setZero();
      out(0, j) = 1.0;
      if (dead_atoms) dead_atoms->push_back(static_cast<int>(j));
      continue;
    }
    // skip the rescale when the norm is already 1 to working precision, so
    // the projection is exactly idempotent
    if (std::abs(n2 - 1.0) > 16.0 * std::numeric_limits<double>::epsilon())
      out.col(j) /= std::sqrt(n2);
  }
  return out;
}

Dictionary project_dictionary(const Dictionary& d, std::vector<int>* dead_atoms) {
  return {project_dictionary_atoms(d.atoms, dead_atoms)};
}

ScalingMatrix project_scaling(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw GeometryError("scaling matrix must be square");
  return {s.diagonal().cwiseMax(0.0)};
}

ScalingMatrix project_scaling(const ScalingMatrix& s) {
  return {s.diag.cwiseMax(0.0)};
}

std::pair<double, Eigen::MatrixXd> pseudo_huber_value_grad(const Eigen::MatrixXd& t, double eps) {
  if (eps <= 0.0) throw ParamError("pseudo-Huber eps must be positive");
  const Eigen::ArrayXXd root = (t.array().square() + eps * eps).sqrt();
  const double value = (root - eps).sum();
  Eigen::MatrixXd grad = (t.array() / root).matrix();
  return {value, std::move(grad)};
}

void forward_differences(const Raster& x, Raster& dx, Raster& dy) {
  dx = Raster(x.width, x.height, x.bands);
  dy = Raster(x.width, x.height, x.bands);
  for (int b = 0; b < x.bands; ++b)
    for (int r = 0; r < x.height; ++r)
      for (int c = 0; c < x.width; ++c) {
        if (c + 1 < x.width) dx.at(b, r, c) = x.at(b, r, c + 1) - x.at(b, r, c);
        if (r + 1 < x.height) dy.at(b, r, c) = x.at(b, r + 1, c) - x.at(b, r, c);
      }
}

Raster divergence(const Raster& fx, const Raster& fy) {
  if (fx.width != fy.width || fx.height != fy.height || fx.bands != fy.bands)
    throw GeometryError("field components have different dimensions");
  const int H = fx.height, W = fx.width;
  Raster out(W, H, fx.bands);
  for (int b = 0; b < fx.bands; ++b)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        double v = 0.0;
        if (W > 1) {
          if (c == 0)
            v += fx.at(b, r, 0);
          else if (c < W - 1)
            v += fx.at(b, r, c) - fx.at(b, r, c - 1);
          else
            v += -fx.at(b, r, W - 2);
        }
        if (H > 1) {
          if (r == 0)
            v += fy.at(b, 0, c);
          else if (r < H - 1)
            v += fy.at(b, r, c) - fy.at(b, r - 1, c);
          else
            v += -fy.at(b, H - 2, c);
        }
        out.at(b, r, c) = v;
      }
  return out;
}

std::pair<double, Raster> tv_value_grad(const Raster& x, double eps, double tau) {
  if (eps <= 0.0 || tau <= 0.0) throw ParamError("TV eps and tau must be positive");
  Raster dx, dy;
  forward_differences(x, dx, dy);
  double value = 0.0;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    const double gx = dx.data[i], gy = dy.data[i];
    const double rx = std::sqrt(gx * gx + eps * eps);
    const double ry = std::sqrt(gy * gy + eps * eps);
    value += (rx - eps) + (ry - eps);
    dx.data[i] = gx / rx;
    dy.data[i] = gy / ry;
  }
  Raster grad = divergence(dx, dy);
  for (double& v : grad.data) v *= -tau;
  return {tau * value, std::move(grad)};
}

double tv_value(const Raster& x, double eps, double tau) {
  if (eps <= 0.0 || tau <= 0.0) throw ParamError("TV eps and tau must be positive");
  Raster dx, dy;
  forward_differences(x, dx, dy);
  double value = 0.0;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    const double gx = dx.data[i], gy = dy.data[i];
    value += std::sqrt(gx * gx + eps * eps) + std::sqrt(gy * gy + eps * eps) - 2.0 * eps;
  }
  return tau * value;
}

double spectral_norm_warm(const LinearOp& apply, const LinearOp& apply_adjoint,
                          Eigen::VectorXd& v, bool* converged) {
  constexpr int kMaxIters = 500;
  constexpr double kTol = 1e-7;
  if (converged) *converged = true;

  double nv = v.norm();
  if (nv == 0.0) {
    v.setZero();
    if (v.size() > 0) v(0) = 1.0;
    nv = 1.0;
  }
  v /= nv;

  double sigma_prev = -1.0;
  int stable = 0;
  for (int k = 0; k < kMaxIters; ++k) {
    Eigen::VectorXd w = apply_adjoint(apply(v));
    const double rayleigh = v.dot(w);
    if (rayleigh <= 0.0) return 0.0;  // null (or numerically null) operator
    const double sigma = std::sqrt(rayleigh);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= kTol * sigma) {
      if (++stable >= 2) return sigma;
    } else {
      stable = 0;
    }
    sigma_prev = sigma;
  }
  if (converged) *converged = false;
  return sigma_prev;
}

double spectral_norm(const LinearOp& apply, const LinearOp& apply_adjoint, int dim,
                     std::uint64_t seed, bool* converged) {
  if (dim < 1) throw ParamError("operator dimension must be positive");
  Eigen::VectorXd v(dim);
  CounterRng rng(seed, 0x73706563ULL);
  for (int i = 0; i < dim; ++i) v(i) = rng.next_gaussian();
  return spectral_norm_warm(apply, apply_adjoint, v, converged);
}

}  // namespace palmcd
