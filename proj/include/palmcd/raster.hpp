#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace palmcd {

enum class Modality { Optical, Sar };

std::string modality_name(Modality m);
Modality modality_from_name(const std::string& name);

/// Multiband image held as float64, planar band-major, row-major within a
/// band. Values are immutable by convention once an image enters the solver;
/// operations return fresh rasters instead of mutating in place.
struct Raster {
  int width = 0;
  int height = 0;
  int bands = 0;
  Modality modality = Modality::Optical;
  double resolution = 1.0;  // meters per pixel, informational only
  std::vector<double> data;

  Raster() = default;
  Raster(int w, int h, int L, Modality m = Modality::Optical, double res = 1.0);

  double& at(int band, int row, int col) {
    return data[(static_cast<std::size_t>(band) * height + row) * width + col];
  }
  double at(int band, int row, int col) const {
    return data[(static_cast<std::size_t>(band) * height + row) * width + col];
  }
  std::size_t size() const { return data.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }

  /// Checks the payload invariants: size, finiteness, SAR nonnegativity.
  /// Throws DataError / GeometryError on violation.
  void validate() const;
};

struct BinaryChangeMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // strictly 0 or 1

  BinaryChangeMask() = default;
  BinaryChangeMask(int w, int h);

  std::uint8_t& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t count_set() const;
};

/// RIMG container: 8-byte magic "RIMGv001", one-line JSON header, float32
/// little-endian payload. Values are stored at float32 precision; the
/// in-memory representation stays float64.
Raster read_raster(const std::string& path);
void write_raster(const Raster& r, const std::string& path);

/// Rescales so the maximum becomes 1; returns the original maximum so the
/// caller can undo the scaling. Inputs are expected nonnegative (sensor
/// data); bands are assumed pre-whitened.
std::pair<Raster, double> normalize(const Raster& r);

/// Binary masks ride in PGM P5 (maxval 255, 0 = no change, 255 = change).
BinaryChangeMask read_mask(const std::string& path);
void write_mask(const BinaryChangeMask& m, const std::string& path);

}  // namespace palmcd
