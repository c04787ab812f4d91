#include <doctest.h>

#include <cmath>
#include <random>

#include "sig/common/bytes.hpp"
#include "sig/grad/adam.hpp"
#include "sig/grad/checkpoint.hpp"
#include "sig/grad/finite_diff.hpp"
#include "sig/grad/ops.hpp"
#include "sig/grad/schedule.hpp"

using namespace sig;
using namespace sig::grad;

namespace {

ParamStore<double> store(std::initializer_list<std::pair<const char*, std::vector<double>>> groups) {
  ParamStore<double> p;
  for (const auto& [name, v] : groups) p.add(name, {static_cast<std::int64_t>(v.size())}, v);
  return p;
}

std::set<std::string, std::less<>> all(const ParamStore<double>& p) {
  std::set<std::string, std::less<>> s;
  for (const auto& n : p.names()) s.insert(n);
  return s;
}

}  // namespace

TEST_CASE("constant objective has zero gradient") {
  auto p = store({{"a", {1.0, 2.0, 3.0}}});
  Objective<double> f = [](Tape<double>& t) {
    auto a = t.param("a");
    return add(scale(sum(a), 0.0), t.scalar(4.0));
  };
  const auto vg = value_and_grad(f, p, all(p));
  CHECK(vg.value == 4.0);
  for (double g : vg.grads.at("a")) CHECK(g == 0.0);
}

TEST_CASE("linear objective gradient equals coefficients") {
  auto p = store({{"a", {0.3, -1.2, 2.0}}});
  const std::vector<double> coeffs{1.5, -2.0, 0.25};
  Objective<double> f = [&](Tape<double>& t) {
    auto c = t.constant(coeffs, {1, 3});
    auto a = reshape(t.param("a"), {1, 3});
    return sum(affine(a, c, t.constant({0.0}, {1})));
  };
  const auto vg = value_and_grad(f, p, all(p));
  CHECK(vg.grads.at("a") == coeffs);
}

TEST_CASE("inactive groups get no gradient entry") {
  auto p = store({{"a", {1.0}}, {"b", {2.0}}});
  Objective<double> f = [](Tape<double>& t) { return sum(add(t.param("a"), t.param("b"))); };
  const auto vg = value_and_grad(f, p, {"a"});
  CHECK(vg.grads.count("a") == 1);
  CHECK(vg.grads.count("b") == 0);
}

TEST_CASE("parameter used twice accumulates gradient") {
  auto p = store({{"a", {3.0}}});
  Objective<double> f = [](Tape<double>& t) {
    auto a = t.param("a");
    return sum(add(a, t.param("a")));
  };
  CHECK(value_and_grad(f, p, all(p)).grads.at("a")[0] == 2.0);
}

TEST_CASE("non-finite value raises numeric error") {
  auto p = store({{"a", {1e308}}});
  Objective<double> f = [](Tape<double>& t) { return sum(scale(t.param("a"), 1e10)); };
  try {
    value_and_grad(f, p, all(p));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
    CHECK(e.category() == "non-finite");
  }
}

TEST_CASE("finite difference of x^2 and exp") {
  auto p = store({{"x", {3.0}}});
  Objective<double> sq = [](Tape<double>& t) {
    auto x = t.param("x");
    return mse(x, t.constant({0.0}, {1}));
  };
  CHECK(finite_difference_grad(sq, p, 1e-4).at("x")[0] == doctest::Approx(6.0).epsilon(1e-6));

  // d/dx softplus(x) at 0 is 1/2; the central difference error is O(eps^2).
  auto q = store({{"x", {0.0}}});
  Objective<double> sp = [](Tape<double>& t) { return sum(activate(t.param("x"), Activation::kSoftplus)); };
  CHECK(std::abs(finite_difference_grad(sp, q, 1e-4).at("x")[0] - 0.5) < 1e-8);

  ParamStore<double> empty;
  Objective<double> c = [](Tape<double>& t) { return t.scalar(1.0); };
  CHECK(finite_difference_grad(c, empty, 1e-4).empty());
}

TEST_CASE("ops match finite differences") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(12), w(15), b(5);
  for (auto& v : x) v = u(gen);
  for (auto& v : w) v = u(gen);
  for (auto& v : b) v = u(gen);
  ParamStore<double> p;
  p.add("x", {4, 3}, x);
  p.add("w", {5, 3}, w);
  p.add("b", {5}, b);
  for (auto act : {Activation::kIdentity, Activation::kSilu, Activation::kSoftplus, Activation::kSigmoid}) {
    Objective<double> f = [act](Tape<double>& t) {
      auto h = activate(affine(t.param("x"), t.param("w"), t.param("b")), act);
      auto c = columns(h, 1, 4);
      auto s = slice(c, 2, {3, 3});
      return mse(s, t.constant(std::vector<double>(9, 0.1), {3, 3}));
    };
    const auto a = value_and_grad(f, p, all(p)).grads;
    const auto n = finite_difference_grad(f, p, 1e-6);
    for (const auto& [name, g] : a)
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(n.at(name)[i]).epsilon(1e-6));
  }
}

TEST_CASE("adam first step moves by lr") {
  auto p = store({{"a", {1.0, -1.0}}});
  OptimizerState<double> st;
  adam_step(p, Gradients<double>{{"a", {0.1, -0.1}}}, st, 1e-2);
  CHECK(std::abs(p.values("a")[0] - (1.0 - 1e-2)) < 1e-6);
  CHECK(std::abs(p.values("a")[1] - (-1.0 + 1e-2)) < 1e-6);
}

TEST_CASE("adam zero gradient leaves parameters") {
  auto p = store({{"a", {0.5, 0.25}}});
  OptimizerState<double> st;
  adam_step(p, Gradients<double>{{"a", {0.0, 0.0}}}, st, 1e-2);
  CHECK(p.values("a")[0] == 0.5);
  CHECK(p.values("a")[1] == 0.25);
}

TEST_CASE("adam second identical step is not larger") {
  auto p = store({{"a", {0.0}}});
  OptimizerState<double> st;
  adam_step(p, Gradients<double>{{"a", {0.3}}}, st, 1e-2);
  const double first = -p.values("a")[0];
  adam_step(p, Gradients<double>{{"a", {0.3}}}, st, 1e-2);
  const double second = -p.values("a")[0] - first;
  CHECK(second <= first + 1e-9);
}

TEST_CASE("adam matches hand evaluation over three steps") {
  // Independent scalar recurrence.
  const double g[3] = {0.2, -0.05, 0.4};
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 3; ++t) {
    m = 0.9 * m + 0.1 * g[t - 1];
    v = 0.999 * v + 0.001 * g[t - 1] * g[t - 1];
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
  }
  auto p = store({{"a", {1.0}}});
  OptimizerState<double> st;
  for (double gi : g) adam_step(p, Gradients<double>{{"a", {gi}}}, st, 1e-3);
  CHECK(p.values("a")[0] == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("adam skips groups without a gradient") {
  auto p = store({{"a", {1.0}}, {"b", {2.0}}});
  OptimizerState<double> st;
  adam_step(p, Gradients<double>{{"a", {1.0}}}, st, 0.1);
  CHECK(p.values("b")[0] == 2.0);
  CHECK(st.moments.count("b") == 0);
}

TEST_CASE("schedules") {
  ScheduleSpec ms{ScheduleKind::kMultistep, 1e-2, 0.3, {20, 40}};
  CHECK(lr_at(ms, 0) == doctest::Approx(1e-2));
  CHECK(lr_at(ms, 19) == doctest::Approx(1e-2));
  CHECK(lr_at(ms, 25) == doctest::Approx(3e-3));
  CHECK(lr_at(ms, 45) == doctest::Approx(9e-4));
  ScheduleSpec ex{ScheduleKind::kExponential, 1e-2, 0.941, {}};
  CHECK(lr_at(ex, 0) == 1e-2);
  CHECK(lr_at(ex, 2) == doctest::Approx(1e-2 * 0.941 * 0.941));
  CHECK_THROWS_AS(validate(ScheduleSpec{ScheduleKind::kMultistep, 1e-2, 0.3, {40, 20}}), Error);
  CHECK_THROWS_AS(validate(ScheduleSpec{ScheduleKind::kExponential, 1e-2, 1.5, {}}), Error);
}

TEST_CASE("checkpoint round trip and conversion") {
  ParamStore<double> p;
  p.add("basis_planes", {2, 3}, {0.5, -1.0, 2.0, 0.125, 3.0, -0.25});
  p.add("renderer_mlp", {2}, {1.0, 2.0});
  const nlohmann::json meta = {{"stage", 1}};
  const auto bytes = encode_checkpoint(p, meta);
  CheckpointInfo info;
  const auto back = decode_checkpoint<double>(bytes, &info);
  CHECK(info.dtype == "f64");
  CHECK(info.meta == meta);
  CHECK(back.names() == p.names());
  CHECK(std::vector<double>(back.values("basis_planes").begin(), back.values("basis_planes").end()) ==
        std::vector<double>(p.values("basis_planes").begin(), p.values("basis_planes").end()));
  CHECK(encode_checkpoint(back, meta) == bytes);
  const auto as_float = decode_checkpoint<float>(bytes);
  CHECK(as_float.values("renderer_mlp")[1] == 2.0f);
}

TEST_CASE("checkpoint golden bytes") {
  ParamStore<float> p;
  p.add("w", {2}, {1.0f, -2.0f});
  const auto bytes = encode_checkpoint(p);
  const std::string header =
      R"({"dtype":"f32","groups":[{"name":"w","nbytes":8,"offset":0,"shape":[2]}],"meta":{}})";
  std::vector<std::uint8_t> expected = {'S', 'I', 'G', 'C', 'K', 'P', 'T', '1'};
  for (int i = 0; i < 8; ++i) expected.push_back(static_cast<std::uint8_t>(header.size() >> (8 * i)));
  expected.insert(expected.end(), header.begin(), header.end());
  for (std::uint8_t b : {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0}) expected.push_back(b);
  CHECK(bytes == expected);
}

TEST_CASE("checkpoint errors") {
  ParamStore<float> p;
  p.add("w", {2}, {1.0f, 2.0f});
  auto bytes = encode_checkpoint(p);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint<float>(bad), Error);
  bytes.pop_back();
  try {
    decode_checkpoint<float>(bytes, nullptr, "x.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("x.ckpt") != std::string::npos);
  }
  try {
    load_checkpoint<float>("/nonexistent/stage1.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "missing-checkpoint");
  }
}

TEST_CASE("param store rejects bad shapes and duplicates") {
  ParamStore<double> p;
  CHECK_THROWS_AS(p.add("a", {2, 2}, {1.0}), Error);
  p.add("a", {1}, {1.0});
  CHECK_THROWS_AS(p.add("a", {1}, {1.0}), Error);
  CHECK(micro_planes_name(3) != basis_weights_name(3));
}
