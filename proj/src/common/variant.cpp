#include "sig/common/variant.hpp"

#include "sig/common/error.hpp"

namespace sig {

Variant parse_variant(std::string_view name) {
  if (name == "ours") return Variant::kOurs;
  if (name == "rgb-baseline") return Variant::kRgbBaseline;
  if (name == "ours-micro") return Variant::kOursMicro;
  if (name == "ours-macro") return Variant::kOursMacro;
  if (name == "ours-m1") return Variant::kOursM1;
  if (name == "ours-rgb") return Variant::kOursRgb;
  throw Error(ErrorKind::kConfig, "unknown-variant", "unknown variant '" + std::string(name) + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kOurs: return "ours";
    case Variant::kRgbBaseline: return "rgb-baseline";
    case Variant::kOursMicro: return "ours-micro";
    case Variant::kOursMacro: return "ours-macro";
    case Variant::kOursM1: return "ours-m1";
    case Variant::kOursRgb: return "ours-rgb";
  }
  return "ours";
}

}  // namespace sig
