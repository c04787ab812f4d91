#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sig/common/image.hpp"
#include "sig/render/camera.hpp"
#include "sig/render/head.hpp"
#include "sig/triplane/triplane.hpp"

namespace sig::render {

template <typename T>
struct CompositeResult {
  std::vector<T> pixel;
  T transmittance = 1;     // light left after the last sample
  std::vector<T> weights;  // w_k = T_k (1 - exp(-sigma_k delta_k))
};

/// Emission-absorption quadrature along one ray:
///   T_k = exp(-sum_{j<k} sigma_j delta_j),  w_k = T_k (1 - exp(-sigma_k delta_k)),
///   pixel = sum_k w_k c_k + T_final * background.
/// colors is n x C row-major.
template <typename T>
CompositeResult<T> composite(std::span<const T> colors, std::span<const T> densities, std::span<const T> deltas,
                             std::span<const T> background);

/// Batched, differentiable compositing: colors [R, S, C], densities [R, S]
/// -> pixels [R, C]. Gradients flow to colors and densities.
template <typename T>
Var<T> composite_op(const Var<T>& colors, const Var<T>& densities, std::span<const T> deltas,
                    std::span<const T> background);

template <typename T>
struct RenderSettings {
  int samples = 64;
  bool stratified = false;
  std::uint64_t seed = 0;  // stratified jitter
  double near = 2.0;
  double far = 6.0;
  std::vector<T> background;  // one value per output channel
};

/// Differentiable render of planes [3, K, K, F] from a pose -> [H, W, C]:
/// rays, samples, Tri-Plane lookup, head, compositing.
template <typename T>
Var<T> render_op(const Var<T>& planes, const CameraPose& pose, const HeadFn<T>& head, const RenderSettings<T>& settings);

/// Non-differentiable convenience wrapper.
template <typename T>
Image render(const triplane::TriPlane<T>& planes, const CameraPose& pose, const RenderHead<T>& head,
             const RenderSettings<T>& settings);

}  // namespace sig::render
