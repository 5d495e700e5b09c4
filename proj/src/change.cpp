#include "palmcd/change.hpp"

#include <algorithm>

#include "palmcd/errors.hpp"

namespace palmcd {

Eigen::VectorXd code_change_energy(const CodeMatrix& da) {
  Eigen::VectorXd e(da.cols());
  for (Eigen::Index i = 0; i < da.cols(); ++i) e(i) = da.col(i).norm();
  return e;
}

Raster energy_to_pixel_map(const Eigen::VectorXd& energies, const PatchGrid& g,
                           EnergyAggregation agg) {
  if (energies.size() != g.patch_count())
    throw GeometryError("energy vector does not match grid patch count");
  const int K = g.patch_size;
  Raster sum(g.dims.width, g.dims.height, 1);
  Raster count(g.dims.width, g.dims.height, 1);
  for (int i = 0; i < g.patch_count(); ++i) {
    const auto [ar, ac] = g.anchors[i];
    const double e = energies(i);
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < K; ++c) {
        if (agg == EnergyAggregation::Mean)
          sum.at(0, ar + r, ac + c) += e;
        else
          sum.at(0, ar + r, ac + c) = std::max(sum.at(0, ar + r, ac + c), e);
        count.at(0, ar + r, ac + c) += 1.0;
      }
  }
  if (agg == EnergyAggregation::Mean)
    for (std::size_t i = 0; i < sum.data.size(); ++i)
      if (count.data[i] > 0.0) sum.data[i] /= count.data[i];
  return sum;
}

BinaryChangeMask threshold_map(const Raster& energy, double tau) {
  if (tau < 0.0) throw ParamError("threshold must be nonnegative");
  if (energy.bands != 1) throw GeometryError("energy map must have a single band");
  BinaryChangeMask m(energy.width, energy.height);
  for (std::size_t i = 0; i < energy.data.size(); ++i)
    m.values[i] = energy.data[i] >= tau ? 1 : 0;
  return m;
}

}  // namespace palmcd
