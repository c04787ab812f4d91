#include "sig/triplane/trainable_count.hpp"

#include "sig/common/error.hpp"

namespace sig::triplane {

FeatureSplit project_variant(const CountConfig& config, Variant variant) {
  const int total = config.f_mic + config.f_mac;
  switch (variant) {
    case Variant::kOurs:
    case Variant::kOursRgb:
      return {config.f_mic, config.f_mac, config.f_mac > 0 ? config.basis_count : 0};
    case Variant::kRgbBaseline:
    case Variant::kOursMicro:
      return {total, 0, 0};
    case Variant::kOursMacro:
      return {0, total, config.basis_count};
    case Variant::kOursM1:
      return {config.f_mic, config.f_mac, config.f_mac > 0 ? 1 : 0};
  }
  throw_config_error("unknown variant");
}

TrainableCount trainable_count(const CountConfig& config, Stage stage, Variant variant) {
  if (config.resolution < 1 || config.f_mic < 0 || config.f_mac < 0 || config.basis_count < 0 || config.n1 < 1) {
    throw_config_error("trainable_count: invalid configuration");
  }
  const auto split = project_variant(config, variant);
  const std::int64_t plane_cells = 3LL * config.resolution * config.resolution;
  std::int64_t values = plane_cells * split.f_mic + split.basis_count;
  if (stage == Stage::kOne && split.f_mac > 0) {
    const std::int64_t shared = plane_cells * split.f_mac * split.basis_count;
    values += (shared + config.n1 - 1) / config.n1;
  }
  return {values, values * 4};
}

}  // namespace sig::triplane
