#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "palmcd/raster.hpp"

namespace palmcd {

/// K²L × N_p matrix; column i is patch i vectorized band-major then
/// row-major.
using PatchMatrix = Eigen::MatrixXd;

struct ImageDims {
  int height = 0;
  int width = 0;
  int bands = 0;
};

inline ImageDims dims_of(const Raster& r) { return {r.height, r.width, r.bands}; }

/// Regular grid of K×K patch anchors (top-left corners) in lexicographic
/// order. Anchors that would overrun the border are dropped; no padding.
struct PatchGrid {
  int patch_size = 0;  // K
  int stride = 1;
  ImageDims dims;
  std::vector<std::pair<int, int>> anchors;  // (row, col)

  int patch_count() const { return static_cast<int>(anchors.size()); }
  int patch_dim() const { return patch_size * patch_size * dims.bands; }
};

PatchGrid make_grid(const ImageDims& dims, int patch_size, int stride);

/// Builds homologous grids over two co-registered images whose linear sizes
/// differ by an integer factor. The grid is enumerated on the coarser image
/// and scaled onto the finer one, so anchors stay paired one-to-one.
/// patch_size1/stride1 are expressed in image-1 pixels.
std::pair<PatchGrid, PatchGrid> make_coupled_grids(const ImageDims& dims1,
                                                   const ImageDims& dims2,
                                                   int patch_size1, int stride1);

PatchMatrix extract_patches(const Raster& x, const PatchGrid& g);

/// Adjoint of extraction: sums zero-padded patch placements. Accumulation
/// order is fixed (patch then band then row) so results are reproducible.
Raster adjoint_accumulate(const PatchMatrix& p, const PatchGrid& g);

/// Per-pixel count of covering patches, as a single-band raster. Its maximum
/// is the operator norm of the summed extract/adjoint composition.
Raster coverage_map(const PatchGrid& g);
int max_coverage(const PatchGrid& g);

}  // namespace palmcd
