#pragma once

#include <cstdint>

#include "palmcd/raster.hpp"

namespace palmcd {

/// Forward sensor simulation parameters. Optical sensors add i.i.d. Gaussian
/// noise; multi-look SAR multiplies by i.i.d. Gamma speckle with unit mean
/// and variance 1/looks.
struct SensorModel {
  Modality modality = Modality::Optical;
  double noise_sigma = 0.0;
  int looks = 1;
};

/// ½ ‖y − x‖²
double gaussian_divergence(const Raster& y, const Raster& x);

/// argmin_x ½‖y − x‖² + (η/2)‖x − u‖², elementwise (y + ηu)/(η + 1)
Raster gaussian_prox(const Raster& y, const Raster& u, double eta);
double gaussian_prox_scalar(double y, double u, double eta);

/// Σ (x − y log x); the solver's SAR data-fitting term. Requires x > 0.
double sar_divergence(const Raster& y, const Raster& x);

/// Σ (y/x − log(y/x) − 1); reporting only, never used inside the solver.
/// Requires x > 0 and y > 0.
double itakura_saito_divergence(const Raster& y, const Raster& x);

/// argmin_{x>0} (x − y log x) + (η/2)(x − u)², elementwise closed form
/// ½(u − 1/η + √((u − 1/η)² + 4y/η)).
Raster sar_prox(const Raster& y, const Raster& u, double eta);
double sar_prox_scalar(double y, double u, double eta);

/// Dispatch on y.modality.
double data_divergence(const Raster& y, const Raster& x);
Raster data_prox(const Raster& y, const Raster& u, double eta);

/// Applies the sensor's noise model. Deterministic per (seed, value index)
/// regardless of evaluation order.
Raster apply_sensor_model(const Raster& x, const SensorModel& m, std::uint64_t seed);

}  // namespace palmcd
