#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "voxmatch/errors.hpp"
#include "voxmatch/volume.hpp"

namespace voxmatch {

/// Integer voxel translation applied to the template.
struct Offset {
  std::ptrdiff_t u = 0;
  std::ptrdiff_t v = 0;
  std::ptrdiff_t w = 0;
};

/// Reference network pattern plus the z-level at which it binarizes for the
/// Dice coefficient.
struct Template {
  Volume volume;
  double mask_threshold = 0.0;
};

enum class MetricKind { ssd, ncc, dice };
enum class MetricDirection { lower_is_better, higher_is_better };

constexpr MetricDirection direction(MetricKind kind) {
  return kind == MetricKind::ssd ? MetricDirection::lower_is_better
                                 : MetricDirection::higher_is_better;
}

constexpr std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::ssd: return "ssd";
    case MetricKind::ncc: return "ncc";
    case MetricKind::dice: return "dice";
  }
  return "?";
}

inline MetricKind parse_metric(std::string_view name) {
  if (name == "ssd") return MetricKind::ssd;
  if (name == "ncc") return MetricKind::ncc;
  if (name == "dice") return MetricKind::dice;
  throw Error("unknown metric \"" + std::string(name) +
              "\", expected ssd, ncc or dice");
}

namespace detail {

inline void require_same_dims(const Volume& f, const Volume& t) {
  if (!f.same_dims(t))
    throw DimMismatch("dims " + std::to_string(f.nx) + "x" +
                      std::to_string(f.ny) + "x" + std::to_string(f.nz) +
                      " vs " + std::to_string(t.nx) + "x" +
                      std::to_string(t.ny) + "x" + std::to_string(t.nz));
}

struct Moments {
  double mean = 0.0;
  double sq_dev = 0.0;  // sum of squared deviations
};

inline Moments moments(const Volume& v) {
  double sum = 0.0;
  for (double x : v.data) sum += x;
  Moments m;
  m.mean = sum / static_cast<double>(v.data.size());
  for (double x : v.data) {
    const double d = x - m.mean;
    m.sq_dev += d * d;
  }
  return m;
}

inline bool is_constant(const Volume& v) {
  for (double x : v.data)
    if (x != v.data.front()) return false;
  return true;
}

}  // namespace detail

/// Sum of squared differences at zero offset, accumulated in storage order
/// so repeated runs are bit-stable.
inline double ssd(const Volume& f, const Template& t) {
  detail::require_same_dims(f, t.volume);
  double acc = 0.0;
  const std::size_t n = f.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = f.data[i] - t.volume.data[i];
    acc += d * d;
  }
  return acc;
}

/// SSD with the template translated by (u,v,w); template samples falling
/// outside the grid contribute nothing (overlap-only sum). The zero offset
/// reproduces ssd() exactly, accumulation order included.
inline double ssd_at_offset(const Volume& f, const Template& t, Offset off) {
  detail::require_same_dims(f, t.volume);
  const auto nx = static_cast<std::ptrdiff_t>(f.nx);
  const auto ny = static_cast<std::ptrdiff_t>(f.ny);
  const auto nz = static_cast<std::ptrdiff_t>(f.nz);
  double acc = 0.0;
  for (std::ptrdiff_t z = 0; z < nz; ++z) {
    const std::ptrdiff_t sz = z - off.w;
    if (sz < 0 || sz >= nz) continue;
    for (std::ptrdiff_t y = 0; y < ny; ++y) {
      const std::ptrdiff_t sy = y - off.v;
      if (sy < 0 || sy >= ny) continue;
      for (std::ptrdiff_t x = 0; x < nx; ++x) {
        const std::ptrdiff_t sx = x - off.u;
        if (sx < 0 || sx >= nx) continue;
        const double d = f.data[static_cast<std::size_t>(x + nx * (y + ny * z))] -
                         t.volume.data[static_cast<std::size_t>(sx + nx * (sy + ny * sz))];
        acc += d * d;
      }
    }
  }
  return acc;
}

/// Zero-normalized (Pearson) cross-correlation, in [-1, 1] up to rounding.
inline double ncc(const Volume& f, const Template& t) {
  detail::require_same_dims(f, t.volume);
  if (detail::is_constant(f)) throw ZeroVariance("candidate volume is constant");
  if (detail::is_constant(t.volume)) throw ZeroVariance("template volume is constant");
  const double mean_f = detail::moments(f).mean;
  const double mean_t = detail::moments(t.volume).mean;
  double num = 0.0, sq_f = 0.0, sq_t = 0.0;
  const std::size_t n = f.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double df = f.data[i] - mean_f;
    const double dt = t.volume.data[i] - mean_t;
    num += df * dt;
    sq_f += df * df;
    sq_t += dt * dt;
  }
  if (!(sq_f > 0.0) || !(sq_t > 0.0))
    throw ZeroVariance("variance underflowed to zero");
  return num / std::sqrt(sq_f * sq_t);
}

/// Dice coefficient over binarized masks: candidate thresholded at
/// `f_threshold`, template at its own mask_threshold. Two empty masks are a
/// perfect match by definition.
inline double dice(const Volume& f, const Template& t, double f_threshold) {
  detail::require_same_dims(f, t.volume);
  std::size_t a = 0, b = 0, both = 0;
  const std::size_t n = f.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_a = f.data[i] > f_threshold;
    const bool in_b = t.volume.data[i] > t.mask_threshold;
    a += in_a;
    b += in_b;
    both += in_a && in_b;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

/// Rescales to mean 0, population standard deviation 1.
inline Volume zscore(const Volume& v) {
  if (v.data.empty() || detail::is_constant(v))
    throw ZeroVariance("cannot z-score a constant volume");
  const detail::Moments m = detail::moments(v);
  const double variance = m.sq_dev / static_cast<double>(v.data.size());
  if (!(variance > 0.0)) throw ZeroVariance("variance underflowed to zero");
  const double sd = std::sqrt(variance);
  Volume out = v;
  for (double& x : out.data) x = (x - m.mean) / sd;
  return out;
}

/// Metric dispatch used by the matcher; `candidate_threshold` only matters
/// for Dice.
inline double evaluate_metric(MetricKind kind, const Volume& f, const Template& t,
                              double candidate_threshold = 0.0) {
  switch (kind) {
    case MetricKind::ssd: return ssd(f, t);
    case MetricKind::ncc: return ncc(f, t);
    case MetricKind::dice: return dice(f, t, candidate_threshold);
  }
  throw Error("unhandled metric kind");
}

}  // namespace voxmatch
