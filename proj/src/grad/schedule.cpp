#include "sig/grad/schedule.hpp"

#include <cmath>

#include "sig/common/error.hpp"

namespace sig::grad {

void validate(const ScheduleSpec& spec) {
  if (!(spec.factor > 0.0 && spec.factor <= 1.0)) throw_config_error("decay factor must lie in (0, 1]");
  if (!(spec.base > 0.0)) throw_config_error("base learning rate must be positive");
  for (std::size_t i = 1; i < spec.milestones.size(); ++i) {
    if (spec.milestones[i] <= spec.milestones[i - 1]) throw_config_error("milestones must be strictly increasing");
  }
}

double lr_at(const ScheduleSpec& spec, int epoch) {
  if (epoch < 0) throw_config_error("epoch must be non-negative");
  switch (spec.kind) {
    case ScheduleKind::kMultistep: {
      int passed = 0;
      for (int m : spec.milestones)
        if (m <= epoch) ++passed;
      return spec.base * std::pow(spec.factor, passed);
    }
    case ScheduleKind::kExponential:
      return spec.base * std::pow(spec.factor, epoch);
  }
  return spec.base;
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "multistep") return ScheduleKind::kMultistep;
  if (name == "exponential") return ScheduleKind::kExponential;
  throw_config_error("unknown scheduler '" + name + "' (expected multistep or exponential)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kMultistep ? "multistep" : "exponential";
}

}  // namespace sig::grad
