#pragma once

#include <Eigen/Core>

#include "palmcd/patches.hpp"
#include "palmcd/raster.hpp"
#include "palmcd/types.hpp"

namespace palmcd {

/// eᵢ = ‖ΔAᵢ‖₂ per column (patch).
Eigen::VectorXd code_change_energy(const CodeMatrix& da);

enum class EnergyAggregation { Mean, Max };

/// Spreads per-patch energies onto pixels. Mean over covering patches by
/// default (smooths patch-boundary artifacts); Max behind the switch.
/// Pixels with no covering patch get 0.
Raster energy_to_pixel_map(const Eigen::VectorXd& energies, const PatchGrid& g,
                           EnergyAggregation agg = EnergyAggregation::Mean);

/// mᵢ = 1 iff eᵢ ≥ tau.
BinaryChangeMask threshold_map(const Raster& energy, double tau);

}  // namespace palmcd
