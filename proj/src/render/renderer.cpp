#include "sig/render/renderer.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "sig/common/parallel.hpp"
#include "sig/triplane/triplane_ops.hpp"

namespace sig::render {

using grad::Shape;
using grad::Tape;

template <typename T>
CompositeResult<T> composite(std::span<const T> colors, std::span<const T> densities, std::span<const T> deltas,
                             std::span<const T> background) {
  const std::size_t n = densities.size();
  const std::size_t c = background.size();
  if (deltas.size() != n || colors.size() != n * c) throw_shape_error("composite: colors, densities and deltas disagree");
  CompositeResult<T> r;
  r.pixel.assign(c, T(0));
  r.weights.resize(n);
  T trans = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const T att = std::exp(-densities[k] * deltas[k]);
    const T w = trans * (T(1) - att);
    r.weights[k] = w;
    for (std::size_t i = 0; i < c; ++i) r.pixel[i] += w * colors[k * c + i];
    trans *= att;
  }
  for (std::size_t i = 0; i < c; ++i) r.pixel[i] += trans * background[i];
  r.transmittance = trans;
  return r;
}

template <typename T>
Var<T> composite_op(const Var<T>& colors, const Var<T>& densities, std::span<const T> deltas,
                    std::span<const T> background) {
  const auto& cs = colors.shape();
  const auto& ds = densities.shape();
  if (cs.size() != 3 || ds.size() != 2 || cs[0] != ds[0] || cs[1] != ds[1]) {
    throw_shape_error("composite_op: colors " + grad::shape_string(cs) + " vs densities " + grad::shape_string(ds));
  }
  const std::int64_t rays = cs[0], samples = cs[1], ch = cs[2];
  if (static_cast<std::int64_t>(background.size()) != ch) throw_shape_error("composite_op: background width");
  if (static_cast<std::int64_t>(deltas.size()) != rays * samples) throw_shape_error("composite_op: delta count");

  auto delta = std::make_shared<std::vector<T>>(deltas.begin(), deltas.end());
  auto bg = std::make_shared<std::vector<T>>(background.begin(), background.end());
  // Per sample: transmittance before the sample; per ray: final transmittance.
  auto trans_before = std::make_shared<std::vector<T>>(rays * samples);
  auto trans_final = std::make_shared<std::vector<T>>(rays);
  std::vector<T> out(static_cast<std::size_t>(rays * ch), T(0));
  const auto& cv = colors.value();
  const auto& dv = densities.value();
  parallel_chunks(rays, 256, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      T trans = 1;
      T* px = out.data() + r * ch;
      for (std::int64_t k = 0; k < samples; ++k) {
        const std::int64_t s = r * samples + k;
        (*trans_before)[s] = trans;
        const T att = std::exp(-dv[s] * (*delta)[s]);
        const T w = trans * (T(1) - att);
        for (std::int64_t i = 0; i < ch; ++i) px[i] += w * cv[s * ch + i];
        trans *= att;
      }
      for (std::int64_t i = 0; i < ch; ++i) px[i] += trans * (*bg)[i];
      (*trans_final)[r] = trans;
    }
  });

  const int ic = colors.id(), id = densities.id();
  return colors.tape().record(
      "composite", std::move(out), Shape{rays, ch}, {colors, densities},
      [ic, id, rays, samples, ch, delta, bg, trans_before, trans_final](Tape<T>& t, std::span<const T> g) {
        const auto& cv = t.value(ic);
        const auto& dv = t.value(id);
        const bool want_c = t.requires_grad(ic), want_d = t.requires_grad(id);
        std::span<T> dc = want_c ? t.grad(ic) : std::span<T>();
        std::span<T> dd = want_d ? t.grad(id) : std::span<T>();
        parallel_chunks(rays, 256, [&](std::int64_t b, std::int64_t e) {
          std::vector<T> suffix(ch);
          for (std::int64_t r = b; r < e; ++r) {
            const T* gr = g.data() + r * ch;
            // suffix = sum_{j > k} w_j c_j + T_final * bg, built back to front.
            for (std::int64_t i = 0; i < ch; ++i) suffix[i] = (*trans_final)[r] * (*bg)[i];
            for (std::int64_t k = samples - 1; k >= 0; --k) {
              const std::int64_t s = r * samples + k;
              const T att = std::exp(-dv[s] * (*delta)[s]);
              const T before = (*trans_before)[s];
              const T after = before * att;
              const T w = before - after;
              const T* ck = cv.data() + s * ch;
              T dtau = 0;
              for (std::int64_t i = 0; i < ch; ++i) {
                dtau += gr[i] * (after * ck[i] - suffix[i]);
                if (want_c) dc[s * ch + i] += w * gr[i];
              }
              if (want_d) dd[s] += dtau * (*delta)[s];
              for (std::int64_t i = 0; i < ch; ++i) suffix[i] += w * ck[i];
            }
          }
        });
      });
}

template <typename T>
Var<T> render_op(const Var<T>& planes, const CameraPose& pose, const HeadFn<T>& head, const RenderSettings<T>& settings) {
  const auto& ps = planes.shape();
  if (ps.size() != 4 || ps[3] != head.inputs) {
    throw_shape_error("render: Tri-Plane has " + std::to_string(ps.size() == 4 ? ps[3] : -1) +
                      " features but the head expects " + std::to_string(head.inputs));
  }
  if (static_cast<int>(settings.background.size()) != head.colors) {
    throw_shape_error("render: background has " + std::to_string(settings.background.size()) + " channels, head emits " +
                      std::to_string(head.colors));
  }
  if (settings.samples < 1) throw_config_error("render: samples must be positive");
  const RayBatch rays = generate_rays(pose, settings.near, settings.far);
  const auto n_rays = static_cast<std::int64_t>(rays.size());
  const std::int64_t n = settings.samples;
  std::vector<T> xyz(static_cast<std::size_t>(n_rays * n * 3));
  std::vector<T> deltas(static_cast<std::size_t>(n_rays * n));
  std::mt19937_64 gen(settings.seed);
  for (std::int64_t r = 0; r < n_rays; ++r) {
    const RaySamples s = sample_along(rays.near[r], rays.far[r], settings.samples, settings.stratified ? &gen : nullptr);
    for (std::int64_t k = 0; k < n; ++k) {
      const Eigen::Vector3d p = rays.origins[r] + s.t[k] * rays.directions[r];
      for (int a = 0; a < 3; ++a) xyz[(r * n + k) * 3 + a] = static_cast<T>(p[a]);
      deltas[r * n + k] = static_cast<T>(s.deltas[k]);
    }
  }
  const Var<T> features = triplane::query_points(planes, std::span<const T>(xyz));
  const HeadOutput<T> out = head.fn(features);
  const Var<T> colors = grad::reshape(out.colors, Shape{n_rays, n, head.colors});
  const Var<T> density = grad::reshape(out.density, Shape{n_rays, n});
  const Var<T> pixels = composite_op(colors, density, std::span<const T>(deltas), std::span<const T>(settings.background));
  return grad::reshape(pixels, Shape{pose.height, pose.width, head.colors});
}

template <typename T>
Image render(const triplane::TriPlane<T>& planes, const CameraPose& pose, const RenderHead<T>& head,
             const RenderSettings<T>& settings) {
  Tape<T> tape;
  const Var<T> pv = tape.constant(planes.data, Shape{3, planes.resolution, planes.resolution, planes.features});
  const Var<T> hp = tape.constant(head.params, Shape{static_cast<std::int64_t>(head.params.size())});
  const Var<T> img = render_op(pv, pose, mlp_head(hp, head.layout, head.color_activation), settings);
  Image out(pose.height, pose.width, head.layout.colors);
  const auto& v = img.value();
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = static_cast<float>(v[i]);
  return out;
}

#define SIG_INSTANTIATE_RENDER(T)                                                                                  \
  template CompositeResult<T> composite<T>(std::span<const T>, std::span<const T>, std::span<const T>,             \
                                           std::span<const T>);                                                    \
  template Var<T> composite_op<T>(const Var<T>&, const Var<T>&, std::span<const T>, std::span<const T>);           \
  template Var<T> render_op<T>(const Var<T>&, const CameraPose&, const HeadFn<T>&, const RenderSettings<T>&);      \
  template Image render<T>(const triplane::TriPlane<T>&, const CameraPose&, const RenderHead<T>&,                  \
                           const RenderSettings<T>&);

SIG_INSTANTIATE_RENDER(float)
SIG_INSTANTIATE_RENDER(double)

}  // namespace sig::render
