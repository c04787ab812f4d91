#include "sig/train/model.hpp"

#include <cmath>

#include "sig/grad/ops.hpp"
#include "sig/render/renderer.hpp"
#include "sig/triplane/triplane_ops.hpp"

namespace sig::train {

using grad::Shape;

namespace {

constexpr double kPlaneInit = 1e-2;

template <typename T>
std::vector<T> uniform_values(std::int64_t n, double bound, std::mt19937_64& gen) {
  std::vector<T> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<T>((2.0 * render::uniform01(gen) - 1.0) * bound);
  return v;
}

template <typename T>
render::RenderSettings<T> settings_for(const ModelSpec& spec, const render::CameraPose& pose, std::span<const T> bg,
                                       bool stratified, std::uint64_t seed) {
  const auto interval = render::interval_for_bounds(pose, spec.bound_radius);
  render::RenderSettings<T> s;
  s.samples = spec.samples;
  s.stratified = stratified;
  s.seed = seed;
  s.near = interval.near;
  s.far = interval.far;
  s.background.assign(bg.begin(), bg.end());
  return s;
}

template <typename T>
Var<T> render_scene(Tape<T>& tape, const ModelSpec& spec, int scene, const render::CameraPose& pose,
                    std::span<const T> bg, bool stratified, std::uint64_t seed) {
  const Var<T> planes = scene_triplane(tape, spec, scene);
  const Var<T> head_params = tape.param(grad::kRendererMlp);
  const auto color_act = spec.latent ? grad::Activation::kIdentity : grad::Activation::kSigmoid;
  const int side = spec.render_size(pose.height);
  const auto rpose = render::with_resolution(pose, side, spec.render_size(pose.width));
  return render::render_op(planes, rpose, render::mlp_head(head_params, spec.head, color_act),
                           settings_for(spec, rpose, bg, stratified, seed));
}

}  // namespace

ModelSpec ModelSpec::from_config(const TrainConfig& c, double bound_radius) {
  validate(c);
  ModelSpec s;
  s.resolution = c.resolution;
  s.f_mic = c.f_mic;
  s.f_mac = c.f_mac;
  s.basis_count = c.basis_count;
  s.latent = c.latent_space();
  s.autoencoder = c.autoencoder;
  s.head.inputs = c.features();
  s.head.hidden = c.render.hidden;
  s.head.colors = s.latent ? c.autoencoder.latent_channels() : 3;
  s.samples = c.render.samples;
  s.stratified = c.render.stratified;
  s.bound_radius = bound_radius;
  return s;
}

template <typename T>
void init_shared_groups(ParamStore<T>& params, const ModelSpec& spec, std::mt19937_64& gen) {
  const std::int64_t k = spec.resolution;
  if (spec.f_mac > 0) {
    const Shape shape{spec.basis_count, 3, k, k, spec.f_mac};
    params.add(grad::kBasisPlanes, shape, uniform_values<T>(grad::numel(shape), kPlaneInit, gen));
  }
  params.add(grad::kRendererMlp, Shape{spec.head.param_count()}, render::init_head_params<T>(spec.head, gen));
  if (spec.latent) {
    auto ae_params = ae::init_autoencoder<T>(spec.autoencoder, gen);
    const Shape enc_shape{static_cast<std::int64_t>(ae_params.encoder.size())};
    const Shape dec_shape{static_cast<std::int64_t>(ae_params.decoder.size())};
    params.add(grad::kEncoder, enc_shape, std::move(ae_params.encoder));
    params.add(grad::kDecoder, dec_shape, std::move(ae_params.decoder));
  }
}

template <typename T>
void init_scene_groups(ParamStore<T>& params, const ModelSpec& spec, int scene, std::mt19937_64& gen) {
  const std::int64_t k = spec.resolution;
  if (spec.f_mic > 0) {
    const Shape shape{3, k, k, spec.f_mic};
    params.add(grad::micro_planes_name(scene), shape, uniform_values<T>(grad::numel(shape), kPlaneInit, gen));
  }
  if (spec.f_mac > 0) {
    params.add(grad::basis_weights_name(scene), Shape{spec.basis_count},
               uniform_values<T>(spec.basis_count, 1.0 / std::sqrt(static_cast<double>(spec.basis_count)), gen));
  }
}

template <typename T>
Var<T> scene_triplane(Tape<T>& tape, const ModelSpec& spec, int scene) {
  Var<T> micro, macro;
  if (spec.f_mic > 0) micro = tape.param(grad::micro_planes_name(scene));
  if (spec.f_mac > 0) {
    macro = triplane::weighted_basis(tape.param(grad::kBasisPlanes), tape.param(grad::basis_weights_name(scene)));
  }
  if (!micro.valid()) return macro;
  if (!macro.valid()) return micro;
  return triplane::concat_features(micro, macro);
}

template <typename T>
std::vector<T> background(const ModelSpec& spec, const ParamStore<T>& params, int image_size) {
  if (!spec.latent) return std::vector<T>(3, T(1));
  ae::AutoencoderParams<T> ae_params;
  const auto enc = params.values(grad::kEncoder);
  ae_params.encoder.assign(enc.begin(), enc.end());
  const Image z = ae::encode(Image(image_size, image_size, 3, 1.0f), ae_params, spec.autoencoder);
  std::vector<double> mean(z.channels, 0.0);
  for (std::size_t i = 0; i < z.data.size(); ++i) mean[i % z.channels] += z.data[i];
  std::vector<T> bg(z.channels);
  const double pixels = static_cast<double>(z.height) * z.width;
  for (int c = 0; c < z.channels; ++c) bg[c] = static_cast<T>(mean[c] / pixels);
  return bg;
}

template <typename T>
Var<T> loss_latent(const Var<T>& z, const Var<T>& z_rendered) {
  return grad::mse(z, z_rendered);
}
template <typename T>
Var<T> loss_rgb(const Var<T>& x, const Var<T>& x_decoded) {
  return grad::mse(x, x_decoded);
}
template <typename T>
Var<T> loss_ae(const Var<T>& x, const Var<T>& x_reconstructed) {
  return grad::mse(x, x_reconstructed);
}

template <typename T>
Var<T> item_objective(Tape<T>& tape, const ModelSpec& spec, const TrainItem& item, const TermWeights& w,
                      std::span<const T> bg, TermValues* values) {
  if (item.image == nullptr) throw_config_error("training item without an image");
  TermValues tv;
  const Var<T> x = ae::image_constant(tape, *item.image);
  // The reconstruction term alone needs no render.
  Var<T> rendered;
  if (!spec.latent || w.latent != 0 || w.rgb != 0)
    rendered = render_scene(tape, spec, item.scene, item.pose, bg, spec.stratified, item.sample_seed);
  std::vector<Var<T>> terms;
  std::vector<T> coeffs;
  if (!spec.latent) {
    const Var<T> l = loss_rgb(x, rendered);
    tv.rgb = static_cast<double>(l.item());
    terms.push_back(l);
    coeffs.push_back(static_cast<T>(w.rgb));
  } else {
    Var<T> z;
    if (w.latent != 0 || w.ae != 0) {
      if (item.latent != nullptr && !tape.is_active(grad::kEncoder))
        z = ae::image_constant(tape, *item.latent);
      else
        z = ae::encode_var(x, tape.param(grad::kEncoder), spec.autoencoder);
    }
    if (w.latent != 0) {
      const Var<T> l = loss_latent(z, rendered);
      tv.latent = static_cast<double>(l.item());
      terms.push_back(l);
      coeffs.push_back(static_cast<T>(w.latent));
    }
    if (w.rgb != 0) {
      const Var<T> l = loss_rgb(x, ae::decode_var(rendered, tape.param(grad::kDecoder), spec.autoencoder));
      tv.rgb = static_cast<double>(l.item());
      terms.push_back(l);
      coeffs.push_back(static_cast<T>(w.rgb));
    }
    if (w.ae != 0) {
      const Var<T> l = loss_ae(x, ae::decode_var(z, tape.param(grad::kDecoder), spec.autoencoder));
      tv.ae = static_cast<double>(l.item());
      terms.push_back(l);
      coeffs.push_back(static_cast<T>(w.ae));
    }
  }
  Var<T> total = terms.empty() ? tape.scalar(T(0))
                               : grad::linear_combination(std::span<const Var<T>>(terms), std::span<const T>(coeffs));
  tv.total = static_cast<double>(total.item());
  if (values != nullptr) *values = tv;
  return total;
}

template <typename T>
Var<T> stage1_objective(Tape<T>& tape, const ModelSpec& spec, std::span<const TrainItem> batch, const TermWeights& w,
                        std::span<const T> bg) {
  if (batch.empty()) throw_config_error("stage1_objective on an empty batch");
  std::vector<Var<T>> terms;
  for (const auto& item : batch) terms.push_back(item_objective(tape, spec, item, w, bg));
  const std::vector<T> weights(terms.size(), T(1) / static_cast<T>(terms.size()));
  return grad::linear_combination(std::span<const Var<T>>(terms), std::span<const T>(weights));
}

template <typename T>
Image render_view(const ParamStore<T>& params, const ModelSpec& spec, int scene, const render::CameraPose& pose,
                  std::span<const T> bg) {
  Tape<T> tape(params, {});
  const Var<T> rendered = render_scene(tape, spec, scene, pose, bg, false, 0);
  if (!spec.latent) return ae::to_image(rendered);
  return ae::to_image(ae::decode_var(rendered, tape.param(grad::kDecoder), spec.autoencoder));
}

#define SIG_INSTANTIATE_MODEL(T)                                                                                   \
  template void init_shared_groups<T>(ParamStore<T>&, const ModelSpec&, std::mt19937_64&);                        \
  template void init_scene_groups<T>(ParamStore<T>&, const ModelSpec&, int, std::mt19937_64&);                    \
  template Var<T> scene_triplane<T>(Tape<T>&, const ModelSpec&, int);                                             \
  template std::vector<T> background<T>(const ModelSpec&, const ParamStore<T>&, int);                             \
  template Var<T> loss_latent<T>(const Var<T>&, const Var<T>&);                                                   \
  template Var<T> loss_rgb<T>(const Var<T>&, const Var<T>&);                                                      \
  template Var<T> loss_ae<T>(const Var<T>&, const Var<T>&);                                                       \
  template Var<T> item_objective<T>(Tape<T>&, const ModelSpec&, const TrainItem&, const TermWeights&,             \
                                    std::span<const T>, TermValues*);                                              \
  template Var<T> stage1_objective<T>(Tape<T>&, const ModelSpec&, std::span<const TrainItem>, const TermWeights&, \
                                      std::span<const T>);                                                         \
  template Image render_view<T>(const ParamStore<T>&, const ModelSpec&, int, const render::CameraPose&,           \
                                std::span<const T>);

SIG_INSTANTIATE_MODEL(float)
SIG_INSTANTIATE_MODEL(double)

}  // namespace sig::train
