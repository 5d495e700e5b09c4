#include "palmcd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palmcd/change.hpp"
#include "palmcd/divergences.hpp"
#include "palmcd/errors.hpp"
#include "palmcd/rng.hpp"

namespace palmcd {

RocCurve roc_curve(const Raster& energy, const BinaryChangeMask& truth) {
  if (energy.bands != 1) throw GeometryError("energy map must have a single band");
  if (energy.width != truth.width || energy.height != truth.height)
    throw GeometryError("energy map and truth mask have different dimensions");

  std::size_t positives = 0, negatives = 0;
  for (auto v : truth.values) (v ? positives : negatives)++;
  if (positives == 0 || negatives == 0)
    throw EvalError("truth mask must contain both classes");

  std::vector<std::pair<double, std::uint8_t>> scored(truth.values.size());
  for (std::size_t i = 0; i < scored.size(); ++i)
    scored[i] = {energy.data[i], truth.values[i]};
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve c;
  c.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double v = scored[i].first;
    // sweep one tie group: threshold tau = v classifies every score >= v as change
    while (i < scored.size() && scored[i].first == v) {
      (scored[i].second ? tp : fp)++;
      ++i;
    }
    const RocPoint pt{static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives};
    if (pt.pfa != c.points.back().pfa || pt.pd != c.points.back().pd) c.points.push_back(pt);
  }
  if (c.points.back().pfa != 1.0 || c.points.back().pd != 1.0) c.points.push_back({1.0, 1.0});
  return c;
}

double auc(const RocCurve& c) {
  double area = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i)
    area += (c.points[i].pfa - c.points[i - 1].pfa) * 0.5 *
            (c.points[i].pd + c.points[i - 1].pd);
  return area;
}

double diagonal_distance(const RocCurve& c) {
  // intersection of the polyline with PD = 1 − PFA; report PD there, which is
  // the distance from (PFA,PD) = (1,0) divided by √2
  auto f = [](const RocPoint& p) { return p.pd + p.pfa - 1.0; };
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const RocPoint &a = c.points[i - 1], &b = c.points[i];
    if (f(a) <= 0.0 && f(b) >= 0.0) {
      const double denom = (b.pd - a.pd) + (b.pfa - a.pfa);
      if (denom <= 0.0) continue;  // degenerate flat segment on the diagonal
      const double t = -f(a) / denom;
      return a.pd + t * (b.pd - a.pd);
    }
  }
  // endpoints are (0,0) and (1,1), so a crossing always exists
  return f(c.points.back()) <= 0.0 ? c.points.back().pd : c.points.front().pd;
}

Raster generate_change(const Raster& x_ref, const ChangeSpec& spec) {
  x_ref.validate();
  if (spec.mask.width != x_ref.width || spec.mask.height != x_ref.height)
    throw GeometryError("change mask does not match image dimensions");
  Raster out = x_ref;
  for (int r = 0; r < x_ref.height; ++r)
    for (int c = 0; c < x_ref.width; ++c) {
      if (!spec.mask.at(r, c)) continue;
      const int sr = r + spec.drow, sc = c + spec.dcol;
      if (sr < 0 || sr >= x_ref.height || sc < 0 || sc >= x_ref.width)
        throw GeometryError("change source offset leaves the image");
      for (int b = 0; b < x_ref.bands; ++b) out.at(b, r, c) = x_ref.at(b, sr, sc);
    }
  return out;
}

namespace {

using PixelSet = std::vector<std::uint8_t>;  // h*w, row-major

std::size_t count_set(const PixelSet& s) {
  return static_cast<std::size_t>(std::accumulate(s.begin(), s.end(), 0l));
}

/// Grows or shrinks the region to exactly `target` pixels, staying within the
/// [margin, dim-margin) frame. Deterministic scan order.
void adjust_to_count(PixelSet& s, int h, int w, int margin, std::size_t target) {
  auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };
  std::size_t n = count_set(s);
  while (n < target) {
    bool grew = false;
    for (int r = margin; r < h - margin && n < target; ++r)
      for (int c = margin; c < w - margin && n < target; ++c) {
        if (s[idx(r, c)]) continue;
        const bool adjacent = (r > 0 && s[idx(r - 1, c)]) || (r + 1 < h && s[idx(r + 1, c)]) ||
                              (c > 0 && s[idx(r, c - 1)]) || (c + 1 < w && s[idx(r, c + 1)]);
        if (adjacent) {
          s[idx(r, c)] = 1;
          ++n;
          grew = true;
        }
      }
    if (!grew) break;
  }
  while (n > target) {
    bool shrank = false;
    for (int r = h - 1; r >= 0 && n > target; --r)
      for (int c = w - 1; c >= 0 && n > target; --c) {
        if (!s[idx(r, c)]) continue;
        const bool boundary = r == 0 || r + 1 == h || c == 0 || c + 1 == w ||
                              !s[idx(r - 1, c)] || !s[idx(r + 1, c)] || !s[idx(r, c - 1)] ||
                              !s[idx(r, c + 1)];
        if (boundary) {
          s[idx(r, c)] = 0;
          --n;
          shrank = true;
        }
      }
    if (!shrank) break;
  }
}

struct BBox {
  int r0, r1, c0, c1;  // inclusive
};

BBox bbox_of(const PixelSet& s, int h, int w) {
  BBox b{h, -1, w, -1};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (s[static_cast<std::size_t>(r) * w + c]) {
        b.r0 = std::min(b.r0, r);
        b.r1 = std::max(b.r1, r);
        b.c0 = std::min(b.c0, c);
        b.c1 = std::max(b.c1, c);
      }
  return b;
}

bool offset_ok(const PixelSet& s, int h, int w, int dr, int dc) {
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!s[static_cast<std::size_t>(r) * w + c]) continue;
      const int sr = r + dr, sc = c + dc;
      if (sr < 0 || sr >= h || sc < 0 || sc >= w) return false;
      if (s[static_cast<std::size_t>(sr) * w + sc]) return false;  // source overlaps mask
    }
  return true;
}

}  // namespace

std::vector<ChangeSpec> make_mask_library(int height, int width, std::uint64_t seed) {
  if (height < 32 || width < 32)
    throw GeometryError("mask library needs at least 32x32 images");

  const double fractions[10] = {0.025, 0.04,  0.055, 0.07,  0.085,
                                0.10,  0.115, 0.125, 0.135, 0.145};
  const std::size_t total = static_cast<std::size_t>(height) * width;
  const std::size_t lo = static_cast<std::size_t>(std::ceil(0.02 * total));
  const std::size_t hi = static_cast<std::size_t>(std::floor(0.15 * total));
  const int margin = std::max(2, std::min(height, width) / 12);

  std::vector<ChangeSpec> library;
  library.reserve(10);
  for (int m = 0; m < 10; ++m) {
    CounterRng rng(seed, 0x6d61736bULL + m);
    const std::size_t target =
        std::clamp(static_cast<std::size_t>(std::llround(fractions[m] * total)), lo, hi);

    PixelSet s(total, 0);
    auto set_px = [&](int r, int c) {
      if (r >= margin && r < height - margin && c >= margin && c < width - margin)
        s[static_cast<std::size_t>(r) * width + c] = 1;
    };

    const int kind = m % 3;  // rectangle, ellipse, L-shape
    const double aspect = 0.6 + 0.8 * rng.next_uniform();
    if (kind == 0) {
      int rh = std::max(2, static_cast<int>(std::lround(std::sqrt(target * aspect))));
      rh = std::min(rh, height - 2 * margin);
      int rw = std::max(2, static_cast<int>(target / rh));
      rw = std::min(rw, width - 2 * margin);
      const int r0 = margin + static_cast<int>(rng.next_u64() %
                                               std::max<std::uint64_t>(1, height - 2 * margin - rh + 1));
      const int c0 = margin + static_cast<int>(rng.next_u64() %
                                               std::max<std::uint64_t>(1, width - 2 * margin - rw + 1));
      for (int r = r0; r < r0 + rh; ++r)
        for (int c = c0; c < c0 + rw; ++c) set_px(r, c);
    } else if (kind == 1) {
      const double a = std::sqrt(target * aspect / 3.14159265358979323846);
      const double b = static_cast<double>(target) / (3.14159265358979323846 * a);
      const int ia = std::max(2, static_cast<int>(std::lround(a)));
      const int ib = std::max(2, static_cast<int>(std::lround(b)));
      const int cr = margin + ia +
                     static_cast<int>(rng.next_u64() %
                                      std::max<std::uint64_t>(1, height - 2 * (margin + ia) + 1));
      const int cc = margin + ib +
                     static_cast<int>(rng.next_u64() %
                                      std::max<std::uint64_t>(1, width - 2 * (margin + ib) + 1));
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
          const double dr = (r - cr) / a, dc = (c - cc) / b;
          if (dr * dr + dc * dc <= 1.0) set_px(r, c);
        }
    } else {
      // two overlapping arms sharing a corner
      const int thick = std::max(3, static_cast<int>(std::lround(std::sqrt(target / 3.0))));
      const int arm = std::max(thick + 2, static_cast<int>(target / (2 * thick)));
      const int armv = std::min(arm, height - 2 * margin);
      const int armh = std::min(arm, width - 2 * margin);
      const int r0 = margin + static_cast<int>(rng.next_u64() %
                                               std::max<std::uint64_t>(1, height - 2 * margin - armv + 1));
      const int c0 = margin + static_cast<int>(rng.next_u64() %
                                               std::max<std::uint64_t>(1, width - 2 * margin - armh + 1));
      for (int r = r0; r < r0 + armv; ++r)
        for (int c = c0; c < c0 + thick; ++c) set_px(r, c);
      for (int r = r0 + armv - thick; r < r0 + armv; ++r)
        for (int c = c0; c < c0 + armh; ++c) set_px(r, c);
    }

    if (count_set(s) == 0) s[static_cast<std::size_t>(margin) * width + margin] = 1;
    adjust_to_count(s, height, width, margin, target);

    const BBox bb = bbox_of(s, height, width);
    const int bbh = bb.r1 - bb.r0 + 1, bbw = bb.c1 - bb.c0 + 1;

    int drow = 0, dcol = 0;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      const int gap = 1 + static_cast<int>(rng.next_u64() % 4);
      const int mode = static_cast<int>(rng.next_u64() % 3);
      const int sr = rng.next_u64() % 2 ? 1 : -1;
      const int sc = rng.next_u64() % 2 ? 1 : -1;
      int dr = mode == 1 ? 0 : sr * (bbh + gap);
      int dc = mode == 0 ? 0 : sc * (bbw + gap);
      if (offset_ok(s, height, width, dr, dc)) {
        drow = dr;
        dcol = dc;
        found = true;
      }
    }
    if (!found) {
      const int fallback[8][2] = {{bbh + 1, 0},        {-(bbh + 1), 0},
                                  {0, bbw + 1},        {0, -(bbw + 1)},
                                  {bbh + 1, bbw + 1},  {-(bbh + 1), bbw + 1},
                                  {bbh + 1, -(bbw + 1)}, {-(bbh + 1), -(bbw + 1)}};
      for (const auto& cand : fallback)
        if (offset_ok(s, height, width, cand[0], cand[1])) {
          drow = cand[0];
          dcol = cand[1];
          found = true;
          break;
        }
    }
    if (!found) throw GeometryError("could not place a disjoint change source");

    ChangeSpec spec;
    spec.mask = BinaryChangeMask(width, height);
    spec.mask.values = s;
    spec.drow = drow;
    spec.dcol = dcol;
    library.push_back(std::move(spec));
  }
  return library;
}

namespace {

/// Separable Gaussian blur with reflected borders.
std::vector<double> gaussian_blur(const std::vector<double>& in, int h, int w, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    norm += kernel[k + radius];
  }
  for (double& v : kernel) v /= norm;

  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  };

  std::vector<double> tmp(in.size()), out(in.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * in[static_cast<std::size_t>(r) * w + reflect(c + k, w)];
      tmp[static_cast<std::size_t>(r) * w + c] = acc;
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect(r + k, h)) * w + c];
      out[static_cast<std::size_t>(r) * w + c] = acc;
    }
  return out;
}

std::vector<double> noise_field(int h, int w, std::uint64_t seed, std::uint64_t field_id) {
  std::vector<double> f(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CounterRng rng(seed, (field_id << 40) + i);
    f[i] = rng.next_uniform();
  }
  return f;
}

void minmax_rescale(std::vector<double>& f) {
  double lo = f[0], hi = f[0];
  for (double v : f) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  for (double& v : f) v = span > 0.0 ? (v - lo) / span : 0.5;
}

}  // namespace

std::pair<Raster, Raster> make_reference_pair(int height, int width, std::uint64_t seed) {
  if (height < 8 || width < 8) throw GeometryError("reference scenes need at least 8x8 pixels");
  const double coarse_sigma = std::max(2.0, std::min(height, width) / 16.0);

  auto f1 = gaussian_blur(noise_field(height, width, seed, 1), height, width, coarse_sigma);
  auto f2 = gaussian_blur(noise_field(height, width, seed, 2), height, width, 2.0);
  minmax_rescale(f1);
  minmax_rescale(f2);

  std::vector<double> structure(f1.size());
  for (std::size_t i = 0; i < f1.size(); ++i) structure[i] = 0.65 * f1[i] + 0.35 * f2[i];

  Raster optical(width, height, 3, Modality::Optical, 10.0);
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const double s = structure[i];
    const double d = f2[i];
    optical.data[i] = 0.10 + 0.85 * (0.80 * s + 0.20 * d);
    optical.data[structure.size() + i] = 0.10 + 0.85 * (0.75 * std::pow(s, 1.2) + 0.25 * d);
    optical.data[2 * structure.size() + i] = 0.10 + 0.85 * (0.70 * std::pow(s, 0.85) + 0.30 * d);
  }

  Raster sar(width, height, 1, Modality::Sar, 10.0);
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const double mix = 0.35 * optical.data[i] + 0.50 * optical.data[structure.size() + i] +
                       0.15 * optical.data[2 * structure.size() + i];
    sar.data[i] = 0.05 + 0.95 * std::pow(mix, 1.7);
  }
  return {std::move(optical), std::move(sar)};
}

ScenarioData simulate_scenario(int scenario, int height, int width, double noise_sigma,
                               int looks, std::uint64_t seed) {
  if (scenario < 1 || scenario > 3) throw ParamError("scenario must be 1, 2 or 3");

  auto [xopt, xsar] = make_reference_pair(height, width, seed);
  auto library = make_mask_library(height, width, mix64(seed ^ 0x6c696272ULL));
  const std::size_t total = static_cast<std::size_t>(height) * width;
  std::size_t best = 0;
  double best_gap = 1.0;
  for (std::size_t i = 0; i < library.size(); ++i) {
    const double cov = static_cast<double>(library[i].mask.count_set()) / total;
    if (std::abs(cov - 0.10) < best_gap) {
      best_gap = std::abs(cov - 0.10);
      best = i;
    }
  }
  const ChangeSpec& spec = library[best];

  const SensorModel optical{Modality::Optical, noise_sigma, 1};
  const SensorModel radar{Modality::Sar, 0.0, looks};

  ScenarioData d;
  d.truth = spec.mask;
  switch (scenario) {
    case 1:
      d.reference1 = xopt;
      d.reference2 = xopt;
      break;
    case 2:
      d.reference1 = xsar;
      d.reference2 = xsar;
      break;
    case 3:
      d.reference1 = xopt;
      d.reference2 = xsar;
      break;
  }
  d.changed1 = generate_change(d.reference1, spec);
  d.changed2 = generate_change(d.reference2, spec);

  const SensorModel& m1 = d.reference1.modality == Modality::Optical ? optical : radar;
  const SensorModel& m2 = d.reference2.modality == Modality::Optical ? optical : radar;
  d.observed1 = apply_sensor_model(d.reference1, m1, mix64(seed ^ 0x6f627331ULL));
  d.observed2 = apply_sensor_model(d.changed2, m2, mix64(seed ^ 0x6f627332ULL));
  return d;
}

ScenarioResult run_scenario(int scenario, std::uint64_t seed, const SolverConfig& cfg) {
  const ScenarioData d = simulate_scenario(scenario, 96, 96, 0.03, 5, seed);
  const auto [y1, scale1] = normalize(d.observed1);
  const auto [y2, scale2] = normalize(d.observed2);

  SolverState st = run(y1, y2, cfg);
  const Eigen::VectorXd e = code_change_energy(st.da);
  const PatchGrid& fine =
      st.grid2.dims.width >= st.grid1.dims.width ? st.grid2 : st.grid1;

  ScenarioResult res;
  res.energy = energy_to_pixel_map(e, fine);
  res.truth = d.truth;
  const RocCurve roc = roc_curve(res.energy, d.truth);
  res.auc = auc(roc);
  res.distance = diagonal_distance(roc);
  return res;
}

}  // namespace palmcd
