#pragma once

#include <string>
#include <vector>

namespace sig::grad {

enum class ScheduleKind { kMultistep, kExponential };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kMultistep;
  double base = 1e-2;
  double factor = 1.0;          // in (0, 1]
  std::vector<int> milestones;  // multistep only, strictly increasing
};

/// Throws sig::Error(kConfig) when the factor or milestones are invalid.
void validate(const ScheduleSpec& spec);

/// multistep: base * factor^(number of milestones <= epoch)
/// exponential: base * factor^epoch
double lr_at(const ScheduleSpec& spec, int epoch);

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

}  // namespace sig::grad
