#pragma once

#include <string>
#include <string_view>

namespace sig {

/// Pipeline configurations compared in the ablation study.
enum class Variant {
  kOurs,         // latent space, micro + macro planes
  kRgbBaseline,  // plain per-scene Tri-Planes rendered in RGB, nothing shared
  kOursMicro,    // no macro planes (F_mac = 0)
  kOursMacro,    // no micro planes (F_mic = 0)
  kOursM1,       // a single basis Tri-Plane (M = 1)
  kOursRgb,      // micro + macro planes trained directly in RGB
};

Variant parse_variant(std::string_view name);  // throws sig::Error(kConfig)
std::string to_string(Variant v);

/// True for variants that render RGB directly and skip the autoencoder.
inline bool is_rgb_variant(Variant v) { return v == Variant::kRgbBaseline || v == Variant::kOursRgb; }

}  // namespace sig
