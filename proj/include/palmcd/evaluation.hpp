#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "palmcd/palm.hpp"
#include "palmcd/raster.hpp"

namespace palmcd {

struct RocPoint {
  double pfa = 0.0;
  double pd = 0.0;
};

/// Empirical ROC: one point per distinct score threshold plus the (0,0) and
/// (1,1) endpoints, sorted by increasing PFA.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc_curve(const Raster& energy, const BinaryChangeMask& truth);

/// Trapezoidal area under the curve (ties get the usual half credit).
double auc(const RocCurve& c);

/// PD at the intersection of the curve with PD = 1 − PFA; equals the distance
/// from the no-detection corner (1,0) normalized by √2.
double diagonal_distance(const RocCurve& c);

/// Copy-paste change: masked pixels take the values found at
/// (row+drow, col+dcol), all bands.
struct ChangeSpec {
  BinaryChangeMask mask;
  int drow = 0;
  int dcol = 0;
};

Raster generate_change(const Raster& x_ref, const ChangeSpec& spec);

/// Ten deterministic copy-paste specs per seed: rectangles, ellipses and
/// L-shapes, each covering 2–15% of the pixels, with source regions disjoint
/// from the masks.
std::vector<ChangeSpec> make_mask_library(int height, int width, std::uint64_t seed);

/// Procedurally generated change-free scene pair: a 3-band optical image of
/// blurred blob fields and a single-band SAR image obtained as a fixed
/// nonlinear band mix of it (shared geometry, different radiometry).
std::pair<Raster, Raster> make_reference_pair(int height, int width, std::uint64_t seed);

struct ScenarioData {
  Raster reference1, reference2;  // change-free latents for the scenario pairing
  Raster changed1, changed2;      // the same with the copy-paste change applied
  Raster observed1, observed2;    // sensor models applied: T₁[ref1], T₂[changed2]
  BinaryChangeMask truth;
};

/// Scenario 1: optical/optical, 2: SAR/SAR, 3: optical reference vs changed
/// SAR. The change mask is the library entry with coverage closest to 10%.
ScenarioData simulate_scenario(int scenario, int height, int width, double noise_sigma,
                               int looks, std::uint64_t seed);

struct ScenarioResult {
  double auc = 0.0;
  double distance = 0.0;
  Raster energy;
  BinaryChangeMask truth;
};

/// Full pipeline on a 96×96 procedural scene: simulate, solve, evaluate
/// against the planted mask. Sensor parameters are fixed (σ = 0.03, 5 looks).
ScenarioResult run_scenario(int scenario, std::uint64_t seed, const SolverConfig& cfg);

}  // namespace palmcd
