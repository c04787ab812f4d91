#include "sig/grad/adam.hpp"

#include <cmath>

namespace sig::grad {

template <typename T>
void adam_step(ParamStore<T>& params, const Gradients<T>& grads, OptimizerState<T>& state, const LearningRateFn& lr) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw_shape_error("gradient for unknown group '" + name + "'");
    if (params.values(name).size() != g.size()) {
      throw_shape_error("gradient for '" + name + "' has " + std::to_string(g.size()) + " values, group has " +
                        std::to_string(params.values(name).size()));
    }
  }
  const auto& cfg = state.config;
  for (const auto& [name, g] : grads) {
    const double rate = lr(name);
    if (!(rate > 0)) throw_config_error("learning rate for '" + name + "' must be positive");
    auto values = params.values(name);
    auto& m = state.moments[name];
    if (m.first.empty()) {
      m.first.assign(g.size(), T(0));
      m.second.assign(g.size(), T(0));
    }
    ++m.steps;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(m.steps));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(m.steps));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T step_size = static_cast<T>(rate / c1);
    const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
    const T eps = static_cast<T>(cfg.epsilon);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m.first[i] = b1 * m.first[i] + (T(1) - b1) * g[i];
      m.second[i] = b2 * m.second[i] + (T(1) - b2) * g[i] * g[i];
      const T denom = std::sqrt(m.second[i]) * inv_sqrt_c2 + eps;
      values[i] -= step_size * m.first[i] / denom;
      if (!std::isfinite(values[i])) {
        throw_numeric_error("adam update produced a non-finite value in group '" + name + "'");
      }
    }
  }
  ++state.step;
}

template void adam_step<float>(ParamStore<float>&, const Gradients<float>&, OptimizerState<float>&, const LearningRateFn&);
template void adam_step<double>(ParamStore<double>&, const Gradients<double>&, OptimizerState<double>&,
                                const LearningRateFn&);

}  // namespace sig::grad
