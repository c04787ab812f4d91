#include "sig/render/head.hpp"

#include <cmath>

#include "sig/render/camera.hpp"

namespace sig::render {

template <typename T>
std::vector<T> init_head_params(const HeadLayout& layout, std::mt19937_64& gen) {
  std::vector<T> p(static_cast<std::size_t>(layout.param_count()));
  auto fill = [&](std::int64_t begin, std::int64_t end, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    for (std::int64_t i = begin; i < end; ++i) p[i] = static_cast<T>((2.0 * uniform01(gen) - 1.0) * bound);
  };
  fill(layout.w1(), layout.w2(), layout.inputs);  // W1, b1
  fill(layout.w2(), layout.w3(), layout.hidden);  // W2, b2
  fill(layout.w3(), layout.param_count(), layout.hidden);
  return p;
}

template <typename T>
HeadSample<T> head_forward(std::span<const T> feature, const RenderHead<T>& head) {
  const auto& l = head.layout;
  if (static_cast<int>(feature.size()) != l.inputs) throw_shape_error("head_forward: feature width does not match head");
  if (static_cast<std::int64_t>(head.params.size()) != l.param_count()) throw_shape_error("head_forward: parameter count");
  const T* p = head.params.data();
  auto layer = [&](std::span<const T> x, std::int64_t w, std::int64_t b, int out, int in, Activation act) {
    std::vector<T> y(out);
    for (int o = 0; o < out; ++o) {
      T acc = p[b + o];
      for (int i = 0; i < in; ++i) acc += p[w + static_cast<std::int64_t>(o) * in + i] * x[i];
      y[o] = grad::activate_scalar(act, acc);
    }
    return y;
  };
  const auto h1 = layer(feature, l.w1(), l.b1(), l.hidden, l.inputs, kHiddenActivation);
  const auto h2 = layer(h1, l.w2(), l.b2(), l.hidden, l.hidden, kHiddenActivation);
  const auto raw = layer(h2, l.w3(), l.b3(), l.outputs(), l.hidden, Activation::kIdentity);
  HeadSample<T> s;
  s.colors.resize(l.colors);
  for (int c = 0; c < l.colors; ++c) s.colors[c] = grad::activate_scalar(head.color_activation, raw[c]);
  s.density = grad::activate_scalar(kDensityActivation, raw[l.colors]);
  return s;
}

template <typename T>
HeadFn<T> mlp_head(const Var<T>& params, const HeadLayout& layout, Activation color_activation) {
  if (params.size() != layout.param_count()) {
    throw_shape_error("render head expects " + std::to_string(layout.param_count()) + " parameters, got " +
                      std::to_string(params.size()));
  }
  HeadFn<T> head;
  head.inputs = layout.inputs;
  head.colors = layout.colors;
  head.fn = [params, layout, color_activation](const Var<T>& features) {
    using grad::Shape;
    const Var<T> w1 = grad::slice(params, layout.w1(), Shape{layout.hidden, layout.inputs});
    const Var<T> b1 = grad::slice(params, layout.b1(), Shape{layout.hidden});
    const Var<T> w2 = grad::slice(params, layout.w2(), Shape{layout.hidden, layout.hidden});
    const Var<T> b2 = grad::slice(params, layout.b2(), Shape{layout.hidden});
    const Var<T> w3 = grad::slice(params, layout.w3(), Shape{layout.outputs(), layout.hidden});
    const Var<T> b3 = grad::slice(params, layout.b3(), Shape{layout.outputs()});
    Var<T> h = grad::activate(grad::affine(features, w1, b1), kHiddenActivation);
    h = grad::activate(grad::affine(h, w2, b2), kHiddenActivation);
    const Var<T> raw = grad::affine(h, w3, b3);
    HeadOutput<T> out;
    out.colors = grad::activate(grad::columns(raw, 0, layout.colors), color_activation);
    out.density = grad::activate(grad::columns(raw, layout.colors, layout.colors + 1), kDensityActivation);
    return out;
  };
  return head;
}

template std::vector<float> init_head_params<float>(const HeadLayout&, std::mt19937_64&);
template std::vector<double> init_head_params<double>(const HeadLayout&, std::mt19937_64&);
template HeadSample<float> head_forward<float>(std::span<const float>, const RenderHead<float>&);
template HeadSample<double> head_forward<double>(std::span<const double>, const RenderHead<double>&);
template HeadFn<float> mlp_head<float>(const Var<float>&, const HeadLayout&, Activation);
template HeadFn<double> mlp_head<double>(const Var<double>&, const HeadLayout&, Activation);

}  // namespace sig::render
