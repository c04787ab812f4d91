#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "sig/grad/ops.hpp"

namespace sig::render {

using grad::Activation;
using grad::Var;

/// Shape of the render MLP: inputs -> hidden -> hidden -> colors + density.
/// Parameters are one flat vector: W1 [hidden, in], b1, W2 [hidden, hidden],
/// b2, W3 [colors + 1, hidden], b3. Hidden layers use SiLU, the density
/// column softplus.
struct HeadLayout {
  int inputs = 0;
  int hidden = 64;
  int colors = 4;

  int outputs() const { return colors + 1; }
  std::int64_t w1() const { return 0; }
  std::int64_t b1() const { return w1() + static_cast<std::int64_t>(hidden) * inputs; }
  std::int64_t w2() const { return b1() + hidden; }
  std::int64_t b2() const { return w2() + static_cast<std::int64_t>(hidden) * hidden; }
  std::int64_t w3() const { return b2() + hidden; }
  std::int64_t b3() const { return w3() + static_cast<std::int64_t>(outputs()) * hidden; }
  std::int64_t param_count() const { return b3() + outputs(); }
};

inline constexpr Activation kHiddenActivation = Activation::kSilu;
inline constexpr Activation kDensityActivation = Activation::kSoftplus;

template <typename T>
struct RenderHead {
  HeadLayout layout;
  Activation color_activation = Activation::kIdentity;  // sigmoid in RGB mode
  std::vector<T> params;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
template <typename T>
std::vector<T> init_head_params(const HeadLayout& layout, std::mt19937_64& gen);

template <typename T>
struct HeadSample {
  std::vector<T> colors;
  T density = 0;
};

/// Plain forward pass for a single feature vector.
template <typename T>
HeadSample<T> head_forward(std::span<const T> feature, const RenderHead<T>& head);

template <typename T>
struct HeadOutput {
  Var<T> colors;   // [P, C]
  Var<T> density;  // [P, 1], non-negative
};

/// Differentiable head: maps features [P, F] to colors and densities.
template <typename T>
struct HeadFn {
  int inputs = 0;
  int colors = 0;
  std::function<HeadOutput<T>(const Var<T>& features)> fn;
};

/// The MLP head over a parameter tensor laid out as HeadLayout describes.
template <typename T>
HeadFn<T> mlp_head(const Var<T>& params, const HeadLayout& layout, Activation color_activation);

}  // namespace sig::render
