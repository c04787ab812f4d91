#include "sig/cli/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <set>
#include <random>

#include "sig/ae/autoencoder.hpp"
#include "sig/common/error.hpp"
#include "sig/grad/finite_diff.hpp"
#include "sig/grad/ops.hpp"
#include "sig/metrics/costs.hpp"
#include "sig/render/renderer.hpp"
#include "sig/train/model.hpp"
#include "sig/triplane/triplane_ops.hpp"

namespace sig::cli {

using grad::ParamStore;
using grad::Shape;
using grad::Tape;
using grad::Var;

namespace {

struct Instance {
  ParamStore<double> params;
  std::function<Var<double>(Tape<double>&)> f64;
  std::function<Var<float>(Tape<float>&)> f32;
};

template <typename F>
Instance instance(ParamStore<double> params, F f) {
  return {std::move(params), [f](Tape<double>& t) { return f(t); }, [f](Tape<float>& t) { return f(t); }};
}

template <typename TapeT>
using value_of = typename std::decay_t<TapeT>::value_type;

template <typename T>
std::vector<T> cast(const std::vector<double>& v) {
  return std::vector<T>(v.begin(), v.end());
}

std::vector<double> uniform(std::mt19937_64& gen, std::int64_t n, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = lo + (hi - lo) * render::uniform01(gen);
  return v;
}

void add_uniform(ParamStore<double>& p, const std::string& name, Shape shape, std::mt19937_64& gen, double lo, double hi) {
  const auto n = grad::numel(shape);
  p.add(name, std::move(shape), uniform(gen, n, lo, hi));
}

// mse against a fixed random target turns any tensor op into a scalar
// objective with a generic upstream gradient.
template <typename T>
Var<T> against(const Var<T>& out, const std::vector<double>& target) {
  return grad::mse(out, out.tape().constant(cast<T>(target), out.shape()));
}

Instance sample_plane_case(std::mt19937_64& gen) {
  const int k = 5, f = 3, points = 6;
  ParamStore<double> p;
  add_uniform(p, "plane", {k, k, f}, gen, -1, 1);
  const auto uv = uniform(gen, 2 * points, -1.2, 1.2);
  const auto target = uniform(gen, points * f, -1, 1);
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    const auto uvt = cast<T>(uv);
    return against(triplane::sample_plane_op(tape.param("plane"), std::span<const T>(uvt)), target);
  });
}

Instance query_point_case(std::mt19937_64& gen) {
  const int k = 4, f = 3, points = 6;
  ParamStore<double> p;
  add_uniform(p, "planes", {3, k, k, f}, gen, -1, 1);
  const auto xyz = uniform(gen, 3 * points, -1.1, 1.1);
  const auto target = uniform(gen, points * f, -1, 1);
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    const auto pts = cast<T>(xyz);
    return against(triplane::query_points(tape.param("planes"), std::span<const T>(pts)), target);
  });
}

Instance head_case(std::mt19937_64& gen) {
  render::HeadLayout layout;
  layout.inputs = 5;
  layout.hidden = 8;
  layout.colors = 4;
  const int points = 3;
  ParamStore<double> p;
  add_uniform(p, "features", {points, layout.inputs}, gen, -1, 1);
  p.add(grad::kRendererMlp, {layout.param_count()}, render::init_head_params<double>(layout, gen));
  const auto tc = uniform(gen, points * layout.colors, -1, 1);
  const auto td = uniform(gen, points, 0, 1);
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    const auto head = render::mlp_head(tape.param(grad::kRendererMlp), layout, grad::Activation::kIdentity);
    const auto out = head.fn(tape.param("features"));
    const Var<T> terms[] = {against(out.colors, tc), against(out.density, td)};
    const T w[] = {T(1), T(1)};
    return grad::linear_combination(std::span<const Var<T>>(terms), std::span<const T>(w));
  });
}

Instance composite_case(std::mt19937_64& gen) {
  const int rays = 3, samples = 6, ch = 3;
  ParamStore<double> p;
  add_uniform(p, "colors", {rays, samples, ch}, gen, 0, 1);
  add_uniform(p, "densities", {rays, samples}, gen, 0.05, 3);
  const auto deltas = uniform(gen, rays * samples, 0.05, 0.4);
  const auto bg = uniform(gen, ch, 0, 1);
  const auto target = uniform(gen, rays * ch, 0, 1);
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    const auto d = cast<T>(deltas);
    const auto b = cast<T>(bg);
    return against(render::composite_op(tape.param("colors"), tape.param("densities"), std::span<const T>(d),
                                        std::span<const T>(b)),
                   target);
  });
}

render::CameraPose random_pose(std::mt19937_64& gen, int size) {
  const double az = 2 * 3.141592653589793 * render::uniform01(gen);
  const double z = 0.2 + 0.6 * render::uniform01(gen);
  const double rho = std::sqrt(1 - z * z);
  render::CameraPose pose;
  pose.camera_to_world =
      render::look_at(3.0 * Eigen::Vector3d(rho * std::cos(az), rho * std::sin(az), z), Eigen::Vector3d::Zero(),
                      Eigen::Vector3d::UnitZ());
  pose.height = pose.width = size;
  return pose;
}

Instance render_case(std::mt19937_64& gen) {
  render::HeadLayout layout;
  layout.inputs = 3;
  layout.hidden = 8;
  layout.colors = 3;
  const int k = 4;
  ParamStore<double> p;
  add_uniform(p, "planes", {3, k, k, layout.inputs}, gen, -1, 1);
  p.add(grad::kRendererMlp, {layout.param_count()}, render::init_head_params<double>(layout, gen));
  const auto pose = random_pose(gen, 4);
  const auto bg = uniform(gen, layout.colors, 0, 1);
  const auto target = uniform(gen, 4 * 4 * layout.colors, 0, 1);
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    render::RenderSettings<T> s;
    s.samples = 8;
    s.near = 2.0;
    s.far = 4.0;
    s.background = cast<T>(bg);
    const auto head = render::mlp_head(tape.param(grad::kRendererMlp), layout, grad::Activation::kSigmoid);
    return against(render::render_op(tape.param("planes"), pose, head, s), target);
  });
}

ae::AutoencoderConfig tiny_autoencoder() {
  ae::AutoencoderConfig c;
  c.encoder = {{3, 2}, {2, 1}};
  c.decoder = {{3, 2}};
  return c;
}

Instance encode_case(std::mt19937_64& gen) {
  const auto cfg = tiny_autoencoder();
  const int size = 6;
  ParamStore<double> p;
  add_uniform(p, "image", {size, size, 3}, gen, 0, 1);
  auto ae_params = ae::init_autoencoder<double>(cfg, gen);
  const Shape shape{static_cast<std::int64_t>(ae_params.encoder.size())};
  p.add(grad::kEncoder, shape, std::move(ae_params.encoder));
  const auto target = uniform(gen, (size / 2) * (size / 2) * cfg.latent_channels(), -1, 1);
  return instance(std::move(p), [=](auto& tape) {
    return against(ae::encode_var(tape.param("image"), tape.param(grad::kEncoder), cfg), target);
  });
}

Instance decode_case(std::mt19937_64& gen) {
  const auto cfg = tiny_autoencoder();
  const int side = 3;
  ParamStore<double> p;
  add_uniform(p, "latent", {side, side, cfg.latent_channels()}, gen, -1, 1);
  auto ae_params = ae::init_autoencoder<double>(cfg, gen);
  const Shape shape{static_cast<std::int64_t>(ae_params.decoder.size())};
  p.add(grad::kDecoder, shape, std::move(ae_params.decoder));
  return instance(std::move(p), [=](auto& tape) {
    return grad::mean(ae::decode_var(tape.param("latent"), tape.param(grad::kDecoder), cfg));
  });
}

template <int Which>
Instance loss_case(std::mt19937_64& gen) {
  ParamStore<double> p;
  add_uniform(p, "a", {3, 3, 4}, gen, -1, 1);
  add_uniform(p, "b", {3, 3, 4}, gen, -1, 1);
  return instance(std::move(p), [](auto& tape) {
    const auto a = tape.param("a");
    const auto b = tape.param("b");
    if constexpr (Which == 0) return train::loss_latent(a, b);
    if constexpr (Which == 1) return train::loss_rgb(a, b);
    if constexpr (Which == 2) return train::loss_ae(a, b);
  });
}

// One scene, 4x4 planes, 8x8 images, all three loss terms.
Instance stage1_case(std::mt19937_64& gen) {
  train::ModelSpec spec;
  spec.resolution = 4;
  spec.f_mic = 2;
  spec.f_mac = 2;
  spec.basis_count = 2;
  spec.latent = true;
  spec.autoencoder = tiny_autoencoder();
  spec.head.inputs = spec.features();
  spec.head.hidden = 8;
  spec.head.colors = spec.autoencoder.latent_channels();
  spec.samples = 6;
  spec.stratified = false;
  spec.bound_radius = 1.0;
  ParamStore<double> p;
  train::init_shared_groups(p, spec, gen);
  train::init_scene_groups(p, spec, 0, gen);
  // Larger plane values than the training initialisation so every term has
  // a gradient well above the finite-difference noise floor.
  for (const auto& name : {grad::micro_planes_name(0), std::string(grad::kBasisPlanes)}) {
    for (auto& v : p.values(name)) v = 2.0 * render::uniform01(gen) - 1.0;
  }
  auto images = std::make_shared<std::vector<Image>>();
  std::vector<render::CameraPose> poses;
  for (int i = 0; i < 2; ++i) {
    Image img(8, 8, 3);
    for (auto& v : img.data) v = static_cast<float>(render::uniform01(gen));
    images->push_back(img);
    poses.push_back(random_pose(gen, 8));
  }
  const auto bg = uniform(gen, spec.colors(), -0.5, 0.5);
  const train::TermWeights weights{1.0, 1.0, 0.1};
  return instance(std::move(p), [=](auto& tape) {
    using T = value_of<decltype(tape)>;
    std::vector<train::TrainItem> batch(2);
    for (int i = 0; i < 2; ++i) {
      batch[i].scene = 0;
      batch[i].pose = poses[i];
      batch[i].image = &(*images)[i];
    }
    const auto b = cast<T>(bg);
    return train::stage1_objective(tape, spec, std::span<const train::TrainItem>(batch), weights, std::span<const T>(b));
  });
}

using Factory = Instance (*)(std::mt19937_64&);

const std::vector<std::pair<std::string, Factory>>& registry() {
  static const std::vector<std::pair<std::string, Factory>> r = {
      {"sample_plane", sample_plane_case}, {"query_point", query_point_case},
      {"head_forward", head_case},         {"composite", composite_case},
      {"render", render_case},             {"encode", encode_case},
      {"decode", decode_case},             {"loss_latent", loss_case<0>},
      {"loss_rgb", loss_case<1>},          {"loss_ae", loss_case<2>},
      {"stage1_objective", stage1_case},
  };
  return r;
}

OpCheck check_op(const std::string& name, Factory factory, const GradcheckOptions& o) {
  OpCheck c;
  c.op = name;
  c.tolerance = gradcheck_tolerance(o.bits);
  std::mt19937_64 gen(o.seed ^ std::hash<std::string>{}(name));
  for (int point = 0; point < o.points; ++point) {
    Instance inst = factory(gen);
    std::set<std::string, std::less<>> active;
    for (const auto& n : inst.params.names()) active.insert(n);
    grad::Gradients<double> analytic;
    if (o.bits == 64) {
      analytic = grad::value_and_grad<double>(inst.f64, inst.params, active).grads;
    } else {
      const auto vg = grad::value_and_grad<float>(inst.f32, inst.params.cast<float>(), active);
      for (const auto& [n, g] : vg.grads) analytic[n] = std::vector<double>(g.begin(), g.end());
    }
    std::vector<double> a, num;
    for (const auto& n : inst.params.names()) {
      const auto size = static_cast<std::int64_t>(inst.params.values(n).size());
      std::vector<std::int64_t> idx(size);
      for (std::int64_t i = 0; i < size; ++i) idx[i] = i;
      const auto take = std::min<std::int64_t>(size, o.coords_per_group);
      for (std::int64_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::int64_t>(render::uniform01(gen) * static_cast<double>(size - i));
        std::swap(idx[i], idx[j]);
        a.push_back(analytic.at(n)[idx[i]]);
        num.push_back(grad::finite_difference_entry<double>(inst.f64, inst.params, n, idx[i], o.epsilon));
      }
    }
    c.coordinates += static_cast<std::int64_t>(a.size());
    c.max_rel_error = std::max(c.max_rel_error, point_relative_error(a, num));
    ++c.points;
  }
  c.passed = c.max_rel_error < c.tolerance;
  return c;
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, _] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

double gradcheck_tolerance(int bits) { return bits == 64 ? 1e-5 : 1e-3; }

double point_relative_error(std::span<const double> a, std::span<const double> n) {
  if (a.size() != n.size()) throw_shape_error("point_relative_error: length mismatch");
  double scale = 0;
  for (std::size_t k = 0; k < a.size(); ++k) scale = std::max({scale, std::abs(a[k]), std::abs(n[k])});
  double worst = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({std::abs(a[k]), std::abs(n[k]), 1e-3 * scale});
    if (denom == 0) continue;
    worst = std::max(worst, std::abs(a[k] - n[k]) / denom);
  }
  return worst;
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  if (o.bits != 32 && o.bits != 64) throw_config_error("gradcheck --bits must be 32 or 64");
  if (o.points < 1 || o.coords_per_group < 1) throw_config_error("gradcheck needs positive point and coordinate counts");
  for (const auto& name : o.only) {
    if (std::find(gradcheck_ops().begin(), gradcheck_ops().end(), name) == gradcheck_ops().end()) {
      throw_config_error("unknown gradcheck operation '" + name + "'");
    }
  }
  GradcheckReport r;
  r.bits = o.bits;
  for (const auto& [name, factory] : registry()) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), name) == o.only.end()) continue;
    r.ops.push_back(check_op(name, factory, o));
  }
  return r;
}

bool GradcheckReport::passed() const {
  return std::all_of(ops.begin(), ops.end(), [](const OpCheck& c) { return c.passed; });
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : ops) {
    j.push_back({{"op", c.op},
                 {"points", c.points},
                 {"coordinates", c.coordinates},
                 {"max_rel_error", c.max_rel_error},
                 {"tolerance", c.tolerance},
                 {"passed", c.passed}});
  }
  return {{"bits", bits}, {"passed", passed()}, {"ops", j}};
}

std::string GradcheckReport::table() const {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : ops) {
    rows.push_back({c.op, std::to_string(c.points), std::to_string(c.coordinates), fmt::format("{:.3e}", c.max_rel_error),
                    fmt::format("{:.0e}", c.tolerance), c.passed ? "pass" : "FAIL"});
  }
  return metrics::format_table({"op", "points", "coords", "max_rel_err", "tol", "status"}, rows);
}

}  // namespace sig::cli
