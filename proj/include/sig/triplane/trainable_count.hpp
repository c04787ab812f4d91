#pragma once

#include <cstdint>

#include "sig/common/variant.hpp"

namespace sig::triplane {

struct CountConfig {
  int resolution = 64;  // K
  int f_mic = 10;
  int f_mac = 22;
  int basis_count = 50;  // M
  int n1 = 500;          // scenes sharing the basis during stage one
};

enum class Stage { kOne, kTwo };

/// Feature split after applying a variant to a base configuration. The total
/// feature count F = f_mic + f_mac is preserved.
struct FeatureSplit {
  int f_mic = 0;
  int f_mac = 0;
  int basis_count = 0;
};
FeatureSplit project_variant(const CountConfig& config, Variant variant);

inline constexpr double kBytesPerMegabyte = 1024.0 * 1024.0;

struct TrainableCount {
  std::int64_t values = 0;
  std::int64_t bytes = 0;  // values stored as f32
  double megabytes() const { return static_cast<double>(bytes) / kBytesPerMegabyte; }
};

/// Per-scene trainable values.
///   stage two: 3 K^2 f_mic + M (micro planes plus one coefficient per basis
///              member); plain Tri-Planes store 3 K^2 F.
///   stage one: the stage-two count plus the scene's share of the basis,
///              ceil(3 K^2 f_mac M / n1).
TrainableCount trainable_count(const CountConfig& config, Stage stage, Variant variant);

}  // namespace sig::triplane
