#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

namespace sig::cli {

struct GradcheckOptions {
  int bits = 64;               // 64: double throughout; 32: float reverse mode vs double differences
  int points = 100;            // random parameter points per operation
  int coords_per_group = 4;    // coordinates probed per group and point
  std::uint64_t seed = 0;
  double epsilon = 1e-4;       // central-difference step
  std::vector<std::string> only;  // restrict to these operations when non-empty
};

struct OpCheck {
  std::string op;
  int points = 0;
  std::int64_t coordinates = 0;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
};

struct GradcheckReport {
  int bits = 64;
  std::vector<OpCheck> ops;

  bool passed() const;
  nlohmann::json to_json() const;
  std::string table() const;
};

/// Operation names in suite order.
const std::vector<std::string>& gradcheck_ops();

/// 1e-5 for 64-bit, 1e-3 for 32-bit.
double gradcheck_tolerance(int bits);

/// Relative error between analytic and numeric gradient entries of one
/// point: max_k |a_k - n_k| / max(|a_k|, |n_k|, 1e-3 * s), where s is the
/// largest magnitude among the probed entries. The floor keeps entries that
/// are tiny compared with the rest of the gradient from dominating.
double point_relative_error(std::span<const double> analytic, std::span<const double> numeric);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace sig::cli
