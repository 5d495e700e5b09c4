#include "palmcd/patches.hpp"

#include <algorithm>

#include "palmcd/errors.hpp"

namespace palmcd {

PatchGrid make_grid(const ImageDims& dims, int patch_size, int stride) {
  if (patch_size < 1) throw ParamError("patch size must be >= 1");
  if (stride < 1) throw ParamError("stride must be >= 1");
  if (patch_size > dims.height || patch_size > dims.width)
    throw GeometryError("patch size exceeds image dimensions");
  PatchGrid g;
  g.patch_size = patch_size;
  g.stride = stride;
  g.dims = dims;
  for (int r = 0; r + patch_size <= dims.height; r += stride)
    for (int c = 0; c + patch_size <= dims.width; c += stride)
      g.anchors.emplace_back(r, c);
  return g;
}

std::pair<PatchGrid, PatchGrid> make_coupled_grids(const ImageDims& dims1,
                                                   const ImageDims& dims2,
                                                   int patch_size1, int stride1) {
  auto integer_ratio = [](int big, int small) -> int {
    if (small < 1 || big < small || big % small != 0) return 0;
    return big / small;
  };

  auto scale_up = [](const PatchGrid& coarse, int rho, const ImageDims& fine_dims) {
    PatchGrid fine;
    fine.patch_size = coarse.patch_size * rho;
    fine.stride = coarse.stride * rho;
    fine.dims = fine_dims;
    fine.anchors.reserve(coarse.anchors.size());
    for (auto [r, c] : coarse.anchors) fine.anchors.emplace_back(r * rho, c * rho);
    return fine;
  };

  if (dims2.width >= dims1.width) {
    const int rho = integer_ratio(dims2.width, dims1.width);
    if (rho == 0 || dims2.height != dims1.height * rho)
      throw GeometryError("resolution ratio is not a positive integer");
    PatchGrid g1 = make_grid(dims1, patch_size1, stride1);
    return {g1, scale_up(g1, rho, dims2)};
  }

  const int rho = integer_ratio(dims1.width, dims2.width);
  if (rho == 0 || dims1.height != dims2.height * rho)
    throw GeometryError("resolution ratio is not a positive integer");
  if (patch_size1 % rho != 0 || stride1 % rho != 0)
    throw GeometryError("patch size and stride must be multiples of the resolution ratio");
  PatchGrid g2 = make_grid(dims2, patch_size1 / rho, stride1 / rho);
  return {scale_up(g2, rho, dims1), g2};
}

namespace {

void check_compatible(const ImageDims& d, const PatchGrid& g) {
  if (d.height != g.dims.height || d.width != g.dims.width || d.bands != g.dims.bands)
    throw GeometryError("grid does not match image dimensions");
}

}  // namespace

PatchMatrix extract_patches(const Raster& x, const PatchGrid& g) {
  check_compatible(dims_of(x), g);
  const int K = g.patch_size;
  PatchMatrix p(g.patch_dim(), g.patch_count());
  for (int i = 0; i < g.patch_count(); ++i) {
    const auto [ar, ac] = g.anchors[i];
    int row = 0;
    for (int b = 0; b < g.dims.bands; ++b)
      for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c) p(row++, i) = x.at(b, ar + r, ac + c);
  }
  return p;
}

Raster adjoint_accumulate(const PatchMatrix& p, const PatchGrid& g) {
  if (p.rows() != g.patch_dim() || p.cols() != g.patch_count())
    throw GeometryError("patch matrix does not match grid");
  const int K = g.patch_size;
  Raster out(g.dims.width, g.dims.height, g.dims.bands);
  for (int i = 0; i < g.patch_count(); ++i) {
    const auto [ar, ac] = g.anchors[i];
    int row = 0;
    for (int b = 0; b < g.dims.bands; ++b)
      for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c) out.at(b, ar + r, ac + c) += p(row++, i);
  }
  return out;
}

Raster coverage_map(const PatchGrid& g) {
  const int K = g.patch_size;
  Raster cov(g.dims.width, g.dims.height, 1);
  for (const auto& [ar, ac] : g.anchors)
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < K; ++c) cov.at(0, ar + r, ac + c) += 1.0;
  return cov;
}

int max_coverage(const PatchGrid& g) {
  const Raster cov = coverage_map(g);
  double m = 0.0;
  for (double v : cov.data) m = std::max(m, v);
  return static_cast<int>(m);
}

}  // namespace palmcd
