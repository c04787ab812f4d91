#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sig/grad/param_store.hpp"

namespace sig::grad {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam accumulators. Moments and bias-correction counts are kept per group,
/// so a group missing from a step's gradients is left untouched, as in the
/// usual "skip parameters without a gradient" convention.
template <typename T>
struct OptimizerState {
  struct Moments {
    std::vector<T> first;
    std::vector<T> second;
    std::int64_t steps = 0;
  };

  AdamConfig config;
  std::int64_t step = 0;
  std::map<std::string, Moments, std::less<>> moments;
};

using LearningRateFn = std::function<double(std::string_view group)>;

/// One bias-corrected Adam update of every group present in `grads`.
/// Throws on a shape mismatch or if an update produces non-finite values.
template <typename T>
void adam_step(ParamStore<T>& params, const Gradients<T>& grads, OptimizerState<T>& state, const LearningRateFn& lr);

template <typename T>
void adam_step(ParamStore<T>& params, const Gradients<T>& grads, OptimizerState<T>& state, double lr) {
  adam_step(params, grads, state, LearningRateFn([lr](std::string_view) { return lr; }));
}

}  // namespace sig::grad
