#pragma once

#include <cstdint>
#include <string_view>

#include "sig/grad/tape.hpp"

namespace sig::grad {

/// Central difference (f(p + eps e_k) - f(p - eps e_k)) / (2 eps) for a
/// single coordinate k of one group.
template <typename T>
T finite_difference_entry(const Objective<T>& objective, const ParamStore<T>& params, std::string_view group,
                          std::int64_t index, T epsilon) {
  if (!(epsilon > T(0))) throw_config_error("finite difference step must be positive");
  ParamStore<T> probe = params;
  auto values = probe.values(group);
  if (index < 0 || index >= static_cast<std::int64_t>(values.size())) {
    throw_shape_error("finite difference index out of range for group '" + std::string(group) + "'");
  }
  const T original = values[index];
  values[index] = original + epsilon;
  const T plus = evaluate(objective, probe);
  values[index] = original - epsilon;
  const T minus = evaluate(objective, probe);
  return (plus - minus) / (T(2) * epsilon);
}

/// Central differences for every coordinate of every group. Costs two
/// objective evaluations per parameter; meant for small verification configs.
template <typename T>
Gradients<T> finite_difference_grad(const Objective<T>& objective, const ParamStore<T>& params, T epsilon) {
  if (!(epsilon > T(0))) throw_config_error("finite difference step must be positive");
  Gradients<T> out;
  ParamStore<T> probe = params;
  for (const auto& name : params.names()) {
    auto values = probe.values(name);
    std::vector<T> g(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      const T original = values[k];
      values[k] = original + epsilon;
      const T plus = evaluate(objective, probe);
      values[k] = original - epsilon;
      const T minus = evaluate(objective, probe);
      values[k] = original;
      g[k] = (plus - minus) / (T(2) * epsilon);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

}  // namespace sig::grad
