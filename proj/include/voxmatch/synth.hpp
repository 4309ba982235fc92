#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voxmatch/errors.hpp"
#include "voxmatch/metrics.hpp"
#include "voxmatch/volume.hpp"

namespace voxmatch {

/// Counter-based pseudo-random stream: draw k is a pure function of
/// (seed, key, k), so per-component streams are independent of the order in
/// which anything is generated. The mixer is the SplitMix64 finalizer.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t key)
      : base_(mix(seed ^ mix(key + 0x9E3779B97F4A7C15ull))) {}

  std::uint64_t next_u64() { return mix(base_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

  /// Uniform in (0, 1]; never 0, so it is safe under log().
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Recipe for a reproducible component set standing in for a real ICA
/// decomposition.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_components = 84;
  std::array<std::size_t, 3> dims{64, 64, 64};
  double noise_sigma = 0.1;
  std::optional<std::size_t> planted_index;  // which component carries the pattern
};

namespace detail {

// stream keys: 0 is the template, component i uses i+1
constexpr std::uint64_t kTemplateKey = 0;
constexpr std::uint64_t component_key(std::size_t i) { return i + 1; }

inline void validate(const SynthSpec& spec) {
  if (spec.n_components < 1)
    throw InvalidSpec("n_components must be >= 1");
  if (spec.dims[0] < 1 || spec.dims[1] < 1 || spec.dims[2] < 1)
    throw InvalidSpec("dims must be positive");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
    throw InvalidSpec("noise_sigma must be finite and >= 0");
  if (spec.planted_index && *spec.planted_index >= spec.n_components)
    throw InvalidSpec("planted_index " + std::to_string(*spec.planted_index) +
                      " out of range for " + std::to_string(spec.n_components) +
                      " components");
}

struct Bump {
  double cx, cy, cz;
  double inv_two_sigma_sq;
  double amplitude;
};

}  // namespace detail

constexpr double kSynthMaskThreshold = 0.5;

/// Deterministically generates `n_components` volumes plus a smooth-blob
/// template. Components are unit-variance noise fields except the planted
/// one, which is template + noise_sigma * noise. Generation is
/// single-threaded; outputs are bit-identical for equal specs.
inline std::pair<std::vector<Volume>, Template> generate(const SynthSpec& spec) {
  detail::validate(spec);
  const std::size_t nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const std::size_t voxels = nx * ny * nz;
  const std::array<float, 3> spacing{2.0f, 2.0f, 2.0f};

  RandomStream tpl_rng(spec.seed, detail::kTemplateKey);
  const std::size_t n_bumps = 3 + static_cast<std::size_t>(tpl_rng.next_u64() % 3);
  const double min_dim = static_cast<double>(std::min({nx, ny, nz}));
  std::vector<detail::Bump> bumps;
  bumps.reserve(n_bumps);
  for (std::size_t b = 0; b < n_bumps; ++b) {
    detail::Bump bump;
    bump.cx = tpl_rng.next_uniform(0.15, 0.85) * static_cast<double>(nx - 1);
    bump.cy = tpl_rng.next_uniform(0.15, 0.85) * static_cast<double>(ny - 1);
    bump.cz = tpl_rng.next_uniform(0.15, 0.85) * static_cast<double>(nz - 1);
    const double sigma = std::max(0.75, tpl_rng.next_uniform(0.10, 0.25) * min_dim);
    bump.inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    bump.amplitude = tpl_rng.next_uniform(0.5, 1.5);
    bumps.push_back(bump);
  }

  Volume tpl_volume;
  tpl_volume.nx = nx;
  tpl_volume.ny = ny;
  tpl_volume.nz = nz;
  tpl_volume.spacing = spacing;
  tpl_volume.label = "template";
  tpl_volume.data.reserve(voxels);
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t x = 0; x < nx; ++x) {
        double value = 0.0;
        for (const auto& bump : bumps) {
          const double dx = static_cast<double>(x) - bump.cx;
          const double dy = static_cast<double>(y) - bump.cy;
          const double dz = static_cast<double>(z) - bump.cz;
          value += bump.amplitude *
                   std::exp(-(dx * dx + dy * dy + dz * dz) * bump.inv_two_sigma_sq);
        }
        tpl_volume.data.push_back(value);
      }

  std::vector<Volume> components;
  components.reserve(spec.n_components);
  for (std::size_t i = 0; i < spec.n_components; ++i) {
    RandomStream rng(spec.seed, detail::component_key(i));
    const bool planted = spec.planted_index && *spec.planted_index == i;
    Volume c;
    c.nx = nx;
    c.ny = ny;
    c.nz = nz;
    c.spacing = spacing;
    c.label = "comp_" + std::to_string(i);
    c.data.reserve(voxels);
    for (std::size_t j = 0; j < voxels; ++j) {
      const double noise = rng.next_gaussian();
      c.data.push_back(planted ? tpl_volume.data[j] + spec.noise_sigma * noise
                               : noise);
    }
    components.push_back(std::move(c));
  }

  return {std::move(components), Template{std::move(tpl_volume), kSynthMaskThreshold}};
}

}  // namespace voxmatch
