#include "palmcd/divergences.hpp"

#include <cmath>

#include "palmcd/errors.hpp"
#include "palmcd/rng.hpp"

namespace palmcd {

namespace {

void check_same_dims(const Raster& a, const Raster& b) {
  if (a.width != b.width || a.height != b.height || a.bands != b.bands)
    throw GeometryError("rasters have different dimensions");
}

}  // namespace

double gaussian_divergence(const Raster& y, const Raster& x) {
  check_same_dims(y, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y.data[i] - x.data[i];
    acc += d * d;
  }
  return 0.5 * acc;
}

double gaussian_prox_scalar(double y, double u, double eta) {
  return (y + eta * u) / (eta + 1.0);
}

Raster gaussian_prox(const Raster& y, const Raster& u, double eta) {
  check_same_dims(y, u);
  if (eta <= 0.0) throw ParamError("prox step eta must be positive");
  Raster out = u;
  for (std::size_t i = 0; i < y.size(); ++i)
    out.data[i] = gaussian_prox_scalar(y.data[i], u.data[i], eta);
  return out;
}

double sar_divergence(const Raster& y, const Raster& x) {
  check_same_dims(y, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (x.data[i] <= 0.0) throw DomainError("sar_divergence: latent value must be positive");
    if (y.data[i] < 0.0) throw DomainError("sar_divergence: observed intensity must be nonnegative");
    acc += x.data[i] - (y.data[i] > 0.0 ? y.data[i] * std::log(x.data[i]) : 0.0);
  }
  return acc;
}

double itakura_saito_divergence(const Raster& y, const Raster& x) {
  check_same_dims(y, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (x.data[i] <= 0.0 || y.data[i] <= 0.0)
      throw DomainError("itakura_saito_divergence: values must be positive");
    const double q = y.data[i] / x.data[i];
    acc += q - std::log(q) - 1.0;
  }
  return acc;
}

double sar_prox_scalar(double y, double u, double eta) {
  // Positive root of η x² + (1 − ηu) x − y = 0, written to avoid
  // cancellation on either sign of (u − 1/η).
  const double b = u - 1.0 / eta;
  const double c = 4.0 * y / eta;
  if (b >= 0.0) return 0.5 * (b + std::sqrt(b * b + c));
  if (c == 0.0) return 0.0;
  return 0.5 * c / (std::sqrt(b * b + c) - b);
}

Raster sar_prox(const Raster& y, const Raster& u, double eta) {
  check_same_dims(y, u);
  if (eta <= 0.0) throw ParamError("prox step eta must be positive");
  Raster out = u;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y.data[i] < 0.0) throw DomainError("sar_prox: observed intensity must be nonnegative");
    out.data[i] = sar_prox_scalar(y.data[i], u.data[i], eta);
  }
  return out;
}

double data_divergence(const Raster& y, const Raster& x) {
  return y.modality == Modality::Optical ? gaussian_divergence(y, x) : sar_divergence(y, x);
}

Raster data_prox(const Raster& y, const Raster& u, double eta) {
  return y.modality == Modality::Optical ? gaussian_prox(y, u, eta) : sar_prox(y, u, eta);
}

Raster apply_sensor_model(const Raster& x, const SensorModel& m, std::uint64_t seed) {
  x.validate();
  Raster out = x;
  if (m.modality == Modality::Optical) {
    if (m.noise_sigma <= 0.0) throw ParamError("optical noise_sigma must be positive");
    for (std::size_t i = 0; i < x.size(); ++i) {
      CounterRng rng(seed, i);
      out.data[i] = x.data[i] + m.noise_sigma * rng.next_gaussian();
    }
    out.modality = Modality::Optical;
  } else {
    if (m.looks < 1) throw ParamError("SAR look count must be >= 1");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x.data[i] < 0.0) throw DomainError("SAR simulation requires nonnegative input");
      CounterRng rng(seed, i);
      const double n = rng.next_gamma(static_cast<double>(m.looks)) / m.looks;
      out.data[i] = x.data[i] * n;
    }
    out.modality = Modality::Sar;
  }
  return out;
}

}  // namespace palmcd
