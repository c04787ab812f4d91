#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sig/grad/finite_diff.hpp"
#include "sig/render/renderer.hpp"

using namespace sig;
using namespace sig::render;

namespace {

CameraPose pose_at(const Eigen::Vector3d& eye, int h, int w, double fov = 0.69813170079773179) {
  CameraPose p;
  p.camera_to_world = look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ());
  p.height = h;
  p.width = w;
  p.fov_y = fov;
  return p;
}

double silu(double x) { return x / (1 + std::exp(-x)); }
double softplus(double x) { return std::log1p(std::exp(x)); }

// Head as three explicit matrix products.
std::vector<double> oracle_head(const std::vector<double>& p, const HeadLayout& l, const std::vector<double>& x) {
  auto layer = [&](std::int64_t w, std::int64_t b, int in, int out, const std::vector<double>& v, bool act) {
    std::vector<double> r(out);
    for (int o = 0; o < out; ++o) {
      double s = p[b + o];
      for (int i = 0; i < in; ++i) s += p[w + static_cast<std::int64_t>(o) * in + i] * v[i];
      r[o] = act ? silu(s) : s;
    }
    return r;
  };
  const auto h1 = layer(l.w1(), l.b1(), l.inputs, l.hidden, x, true);
  const auto h2 = layer(l.w2(), l.b2(), l.hidden, l.hidden, h1, true);
  auto out = layer(l.w3(), l.b3(), l.hidden, l.outputs(), h2, false);
  out.back() = softplus(out.back());
  return out;
}

HeadFn<double> vacuum_head(int inputs, int colors) {
  HeadFn<double> h;
  h.inputs = inputs;
  h.colors = colors;
  h.fn = [colors](const Var<double>& f) {
    const auto n = f.shape()[0];
    auto& t = f.tape();
    return HeadOutput<double>{t.constant(std::vector<double>(n * colors, 0.7), {n, colors}),
                              t.constant(std::vector<double>(n, 0.0), {n, 1})};
  };
  return h;
}

}  // namespace

TEST_CASE("centre pixel looks at the origin") {
  const auto p = pose_at({1.0, -2.0, 2.5}, 5, 5);
  const auto rays = generate_rays(p, 2.0, 6.0);
  const Eigen::Vector3d expected = (-p.position()).normalized();
  CHECK((rays.directions[2 * 5 + 2] - expected).norm() < 1e-6);
  for (const auto& d : rays.directions) CHECK(std::abs(d.norm() - 1.0) < 1e-12);
}

TEST_CASE("corner pixel of a 90 degree camera") {
  CameraPose p;  // identity: looks down -z
  p.height = p.width = 2;
  p.fov_y = std::numbers::pi / 2;
  const auto rays = generate_rays(p, 1.0, 2.0);
  // Pixel (0, 0) centre sits at (-0.5, 0.5) on the image plane z = -1.
  const Eigen::Vector3d expected = Eigen::Vector3d(-0.5, 0.5, -1.0).normalized();
  CHECK((rays.directions[0] - expected).norm() < 1e-12);
  const double angle = std::acos(-rays.directions[0].z());
  CHECK(angle == doctest::Approx(std::atan(std::sqrt(0.5))).epsilon(1e-12));
}

TEST_CASE("invalid poses are rejected") {
  CameraPose p;
  p.camera_to_world(0, 0) = 2.0;
  CHECK_THROWS_AS(validate(p), Error);
  CameraPose q;
  q.height = 0;
  CHECK_THROWS_AS(validate(q), Error);
}

TEST_CASE("midpoint samples") {
  const auto s = sample_along(2.0, 6.0, 2);
  CHECK(s.t == std::vector<double>{3.0, 5.0});
  CHECK(s.deltas == std::vector<double>{2.0, 2.0});
}

TEST_CASE("stratified samples stay in their bins and partition the interval") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 gen(seed);
    const auto s = sample_along(2.0, 6.0, 8, &gen);
    double total = 0;
    for (int k = 0; k < 8; ++k) {
      CHECK(s.t[k] >= 2.0 + 0.5 * k);
      CHECK(s.t[k] < 2.0 + 0.5 * (k + 1));
      total += s.deltas[k];
    }
    CHECK(std::abs(total - 4.0) < 1e-12);
    std::mt19937_64 again(seed);
    CHECK(sample_along(2.0, 6.0, 8, &again).t == s.t);
  }
}

TEST_CASE("zero-weight head outputs activated biases") {
  HeadLayout l{3, 4, 2};
  RenderHead<double> h{l, Activation::kIdentity, std::vector<double>(l.param_count(), 0.0)};
  h.params[l.b3() + 0] = 0.25;
  h.params[l.b3() + 1] = -0.5;
  h.params[l.b3() + 2] = -3.0;
  const std::vector<double> x{0.3, -2.0, 1.0};
  const auto s = head_forward<double>(x, h);
  CHECK(s.colors == std::vector<double>{0.25, -0.5});
  CHECK(s.density == doctest::Approx(softplus(-3.0)));
}

TEST_CASE("head matches matrix-multiply oracle") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    HeadLayout l{2 + trial % 5, 3 + trial % 7, 1 + trial % 4};
    RenderHead<double> h{l, Activation::kIdentity, init_head_params<double>(l, gen)};
    std::vector<double> x(l.inputs);
    for (auto& v : x) v = n(gen);
    const auto s = head_forward<double>(x, h);
    const auto o = oracle_head(h.params, l, x);
    for (int c = 0; c < l.colors; ++c) CHECK(std::abs(s.colors[c] - o[c]) < 1e-6);
    CHECK(std::abs(s.density - o.back()) < 1e-6);
    CHECK(s.density >= 0);

    grad::ParamStore<double> p;
    p.add("head", {l.param_count()}, h.params);
    grad::Tape<double> t(p, {});
    const auto out = mlp_head(t.param("head"), l, Activation::kIdentity).fn(t.constant(x, {1, l.inputs}));
    for (int c = 0; c < l.colors; ++c) CHECK(std::abs(out.colors.value()[c] - o[c]) < 1e-12);
    CHECK(std::abs(out.density.value()[0] - o.back()) < 1e-12);
  }
}

TEST_CASE("compositing through vacuum returns the background") {
  const std::vector<double> colors(5 * 3, 0.4), sigma(5, 0.0), delta(5, 0.3), bg{0.1, 0.2, 0.9};
  const auto r = composite<double>(colors, sigma, delta, bg);
  CHECK(r.pixel == bg);
  CHECK(r.transmittance == 1.0);
}

TEST_CASE("homogeneous medium matches closed form") {
  const int n = 128;
  const double tn = 2.0, tf = 6.0, sigma = 0.7, c = 0.8, bg = 0.3;
  const auto s = sample_along(tn, tf, n);
  const std::vector<double> colors(n, c), sig(n, sigma), b{bg};
  const auto r = composite<double>(colors, sig, s.deltas, b);
  const double att = std::exp(-sigma * (tf - tn));
  CHECK(std::abs(r.pixel[0] - (c * (1 - att) + bg * att)) < 1e-3);
}

TEST_CASE("opaque front sample wins") {
  const std::vector<double> colors{0.9, 0.1, 0.2, 0.8, 0.5, 0.5}, sigma{50.0, 3.0, 1.0}, delta{1.0, 1.0, 1.0}, bg{0.0, 1.0};
  const auto r = composite<double>(colors, sigma, delta, bg);
  CHECK(std::abs(r.pixel[0] - 0.9) < 1e-6);
  CHECK(std::abs(r.pixel[1] - 0.1) < 1e-6);
}

TEST_CASE("weights and final transmittance sum to one") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int ray = 0; ray < 100000; ++ray) {
    const int n = 1 + ray % 64;
    std::vector<double> colors(n), sigma(n), delta(n);
    for (int k = 0; k < n; ++k) {
      colors[k] = u(gen);
      sigma[k] = 5 * u(gen);
      delta[k] = 0.2 * u(gen);
    }
    const std::vector<double> bg{1.0};
    const auto r = composite<double>(colors, sigma, delta, bg);
    double total = r.transmittance;
    for (double w : r.weights) total += w;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("render shape and vacuum background") {
  grad::ParamStore<double> p;
  p.add("planes", {3, 4, 4, 2}, std::vector<double>(3 * 4 * 4 * 2, 0.1));
  grad::Tape<double> t(p, {});
  RenderSettings<double> s;
  s.samples = 8;
  s.background = {0.2, 0.4, 0.6};
  const auto img = render_op(t.param("planes"), pose_at({0, -3, 1}, 5, 7), vacuum_head(2, 3), s);
  CHECK(img.shape() == grad::Shape{5, 7, 3});
  for (std::size_t i = 0; i < img.value().size(); ++i) CHECK(img.value()[i] == s.background[i % 3]);
}

TEST_CASE("render rejects mismatched head") {
  grad::ParamStore<double> p;
  p.add("planes", {3, 4, 4, 2}, std::vector<double>(3 * 4 * 4 * 2, 0.1));
  grad::Tape<double> t(p, {});
  RenderSettings<double> s;
  s.background = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(render_op(t.param("planes"), pose_at({0, -3, 1}, 2, 2), vacuum_head(3, 3), s), Error);
}

TEST_CASE("render gradient on a tiny configuration") {
  // K = 8, 16x16 image, 32 samples; every plane value and head weight.
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-1, 1);
  const HeadLayout l{2, 6, 3};
  grad::ParamStore<double> p;
  std::vector<double> planes(3 * 8 * 8 * 2);
  for (auto& v : planes) v = u(gen);
  p.add("planes", {3, 8, 8, 2}, planes);
  p.add("head", {l.param_count()}, init_head_params<double>(l, gen));
  const auto pose = pose_at({2.0, -2.0, 1.5}, 16, 16);
  grad::Objective<double> f = [&](grad::Tape<double>& t) {
    RenderSettings<double> s;
    s.samples = 32;
    s.near = 2.5;
    s.far = 4.5;
    s.background = {1.0, 1.0, 1.0};
    return grad::mean(render_op(t.param("planes"), pose, mlp_head(t.param("head"), l, Activation::kSigmoid), s));
  };
  const auto a = grad::value_and_grad(f, p, {"planes", "head"}).grads;
  const auto n = grad::finite_difference_grad(f, p, 1e-4);
  for (const auto& [name, g] : a) {
    double scale = 0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double denom = std::max({std::abs(g[i]), std::abs(n.at(name)[i]), 1e-3 * scale});
      CHECK(std::abs(g[i] - n.at(name)[i]) / denom < 1e-5);
    }
  }
}

TEST_CASE("composite gradient") {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> u(0, 1);
  grad::ParamStore<double> p;
  std::vector<double> c(2 * 5 * 2), s(2 * 5);
  for (auto& v : c) v = u(gen);
  for (auto& v : s) v = 3 * u(gen);
  p.add("c", {2, 5, 2}, c);
  p.add("s", {2, 5}, s);
  const std::vector<double> delta(10, 0.3), bg{0.5, 1.0};
  grad::Objective<double> f = [&](grad::Tape<double>& t) {
    return grad::mse(composite_op(t.param("c"), t.param("s"), std::span<const double>(delta), std::span<const double>(bg)),
                     t.constant({0.1, 0.9, 0.4, 0.2}, {2, 2}));
  };
  const auto a = grad::value_and_grad(f, p, {"c", "s"}).grads;
  const auto n = grad::finite_difference_grad(f, p, 1e-6);
  for (const auto& [name, g] : a)
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(n.at(name)[i]).epsilon(1e-7));
}
