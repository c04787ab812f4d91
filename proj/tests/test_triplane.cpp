#include <doctest.h>

#include <cmath>
#include <random>

#include "sig/grad/finite_diff.hpp"
#include "sig/grad/ops.hpp"
#include "sig/triplane/trainable_count.hpp"
#include "sig/triplane/triplane.hpp"
#include "sig/triplane/triplane_ops.hpp"

using namespace sig;
using namespace sig::triplane;

namespace {

// Second implementation: explicit node coordinates and the four-corner
// formula, no shared helpers with the library.
std::vector<double> oracle_sample(const std::vector<double>& plane, int k, int f, double u, double v) {
  u = std::min(1.0, std::max(-1.0, u));
  v = std::min(1.0, std::max(-1.0, v));
  const double step = 2.0 / (k - 1);
  int i = static_cast<int>((u + 1.0) / step), j = static_cast<int>((v + 1.0) / step);
  if (i > k - 2) i = k - 2;
  if (j > k - 2) j = k - 2;
  const double x0 = -1.0 + i * step, y0 = -1.0 + j * step;
  const double a = (u - x0) / step, b = (v - y0) / step;
  std::vector<double> out(f);
  auto at = [&](int jj, int ii, int c) { return plane[(static_cast<std::size_t>(jj) * k + ii) * f + c]; };
  for (int c = 0; c < f; ++c) {
    out[c] = (1 - a) * (1 - b) * at(j, i, c) + a * (1 - b) * at(j, i + 1, c) + (1 - a) * b * at(j + 1, i, c) +
             a * b * at(j + 1, i + 1, c);
  }
  return out;
}

TriPlane<double> random_planes(int k, int f, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1, 1);
  auto t = TriPlane<double>::zeros(k, f);
  for (auto& v : t.data) v = u(gen);
  return t;
}

}  // namespace

TEST_CASE("sample on grid node returns node feature") {
  std::mt19937_64 gen(1);
  const auto t = random_planes(5, 3, gen);
  const auto plane = t.plane(0);
  const auto s = sample_plane<double>(plane, 5, 3, -1.0 + 2.0 * 3 / 4, -1.0 + 2.0 * 1 / 4);
  for (int c = 0; c < 3; ++c) CHECK(s[c] == plane[(1 * 5 + 3) * 3 + c]);
}

TEST_CASE("sample at cell centre averages corners") {
  std::mt19937_64 gen(2);
  const auto t = random_planes(4, 2, gen);
  const auto plane = t.plane(1);
  const double step = 2.0 / 3;
  const auto s = sample_plane<double>(plane, 4, 2, -1.0 + 1.5 * step, -1.0 + 0.5 * step);
  for (int c = 0; c < 2; ++c) {
    const double mean =
        (plane[(0 * 4 + 1) * 2 + c] + plane[(0 * 4 + 2) * 2 + c] + plane[(1 * 4 + 1) * 2 + c] + plane[(1 * 4 + 2) * 2 + c]) / 4;
    CHECK(s[c] == doctest::Approx(mean).epsilon(1e-14));
  }
}

TEST_CASE("sample clamps outside the unit square") {
  std::mt19937_64 gen(3);
  const auto t = random_planes(6, 4, gen);
  CHECK(sample_plane<double>(t.plane(2), 6, 4, -2.0, 0.0) == sample_plane<double>(t.plane(2), 6, 4, -1.0, 0.0));
  CHECK(sample_plane<double>(t.plane(2), 6, 4, 0.3, 7.0) == sample_plane<double>(t.plane(2), 6, 4, 0.3, 1.0));
}

TEST_CASE("query of constant planes is three times the constant") {
  auto t = TriPlane<double>::zeros(4, 2);
  for (auto& v : t.data) v = 0.7;
  for (double x : {-1.0, 0.1, 0.9})
    for (double c : query_point(t, x, -0.4, 0.25)) CHECK(c == doctest::Approx(2.1));
}

TEST_CASE("query with two zero planes equals the third sample") {
  std::mt19937_64 gen(4);
  auto t = random_planes(5, 3, gen);
  for (int p : {kXY, kXZ}) std::fill(t.plane(p).begin(), t.plane(p).end(), 0.0);
  const auto q = query_point(t, 0.2, -0.35, 0.8);
  CHECK(q == sample_plane<double>(t.plane(kYZ), 5, 3, -0.35, 0.8));
}

TEST_CASE("query matches brute-force oracle") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 7, f = 1 + trial % 4;
    const auto t = random_planes(k, f, gen);
    const double x = u(gen), y = u(gen), z = u(gen);
    std::vector<double> expected(f, 0.0);
    const double coords[3][2] = {{x, y}, {x, z}, {y, z}};
    for (int p = 0; p < 3; ++p) {
      const std::vector<double> plane(t.plane(p).begin(), t.plane(p).end());
      const auto s = oracle_sample(plane, k, f, coords[p][0], coords[p][1]);
      for (int c = 0; c < f; ++c) expected[c] += s[c];
    }
    const auto got = query_point(t, x, y, z);
    for (int c = 0; c < f; ++c) CHECK(got[c] == doctest::Approx(expected[c]).epsilon(1e-12));
  }
}

TEST_CASE("tape query agrees with plain query") {
  std::mt19937_64 gen(6);
  const auto t = random_planes(4, 3, gen);
  grad::ParamStore<double> p;
  p.add("planes", {3, 4, 4, 3}, t.data);
  const std::vector<double> pts{0.1, 0.2, -0.3, 1.0, -1.0, 0.5};
  grad::Tape<double> tape(p, {});
  const auto out = query_points(tape.param("planes"), std::span<const double>(pts));
  CHECK(out.shape() == grad::Shape{2, 3});
  for (int i = 0; i < 2; ++i) {
    const auto q = query_point(t, pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
    for (int c = 0; c < 3; ++c) CHECK(out.value()[i * 3 + c] == doctest::Approx(q[c]).epsilon(1e-14));
  }
}

TEST_CASE("compose degenerate cases") {
  std::mt19937_64 gen(7);
  MicroMacroTriPlane<double> mm{random_planes(3, 2, gen), {1.0}};
  BasisSet<double> basis{1, 3, 4, random_planes(3, 4, gen).data};
  auto c = compose(mm, basis);
  CHECK(c.features == 6);
  for (int p = 0; p < 3; ++p)
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 3; ++u)
        for (int f = 0; f < 6; ++f) {
          const double expected = f < 2 ? mm.micro.data[mm.micro.index(p, v, u, f)]
                                        : basis.data[((static_cast<std::size_t>(p) * 3 + v) * 3 + u) * 4 + f - 2];
          CHECK(c.data[c.index(p, v, u, f)] == expected);
        }
  mm.coeffs = {0.0};
  c = compose(mm, basis);
  for (int f = 2; f < 6; ++f) CHECK(c.data[c.index(1, 2, 0, f)] == 0.0);
}

TEST_CASE("compose widths at the published configuration") {
  MicroMacroTriPlane<float> mm{TriPlane<float>::zeros(2, 10), std::vector<float>(50, 0.0f)};
  BasisSet<float> basis{50, 2, 22, std::vector<float>(50 * 3 * 2 * 2 * 22, 0.0f)};
  CHECK(compose(mm, basis).features == 32);
}

TEST_CASE("weighted basis and concat gradients") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1, 1);
  grad::ParamStore<double> p;
  std::vector<double> b(2 * 3 * 2 * 2 * 2), w(2), m(3 * 2 * 2 * 1);
  for (auto* v : {&b, &w, &m})
    for (auto& x : *v) x = u(gen);
  p.add("basis", {2, 3, 2, 2, 2}, b);
  p.add("w", {2}, w);
  p.add("micro", {3, 2, 2, 1}, m);
  std::vector<double> target(3 * 2 * 2 * 3);
  for (auto& x : target) x = u(gen);
  grad::Objective<double> f = [&](grad::Tape<double>& t) {
    auto c = concat_features(t.param("micro"), weighted_basis(t.param("basis"), t.param("w")));
    return grad::mse(c, t.constant(target, {3, 2, 2, 3}));
  };
  const auto a = grad::value_and_grad(f, p, {"basis", "w", "micro"}).grads;
  const auto n = grad::finite_difference_grad(f, p, 1e-6);
  for (const auto& [name, g] : a)
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(n.at(name)[i]).epsilon(1e-7));
}

TEST_CASE("trainable counts at the published configuration") {
  const CountConfig cfg;
  const auto base = trainable_count(cfg, Stage::kTwo, Variant::kRgbBaseline);
  CHECK(base.values == 393216);
  CHECK(base.bytes == 393216 * 4);
  CHECK(base.megabytes() == doctest::Approx(1.50).epsilon(1e-12));
  const auto ours = trainable_count(cfg, Stage::kTwo, Variant::kOurs);
  CHECK(ours.values == 122930);
  CHECK(trainable_count(cfg, Stage::kTwo, Variant::kOursMicro).values == base.values);
  CHECK(trainable_count(cfg, Stage::kTwo, Variant::kOursMacro).values == 50);
  CHECK(trainable_count(cfg, Stage::kTwo, Variant::kOursM1).values == 3 * 64 * 64 * 10 + 1);
  // Stage one also carries the per-scene share of the basis.
  CHECK(trainable_count(cfg, Stage::kOne, Variant::kOurs).values > ours.values);
}

TEST_CASE("baseline to micro ratio tends to F over F_mic") {
  // 3 K^2 F / (3 K^2 F_mic + M) -> F / F_mic as K grows.
  for (int k : {64, 256, 1024, 4096}) {
    const CountConfig cfg{k, 10, 22, 50, 500};
    const double ratio = static_cast<double>(trainable_count(cfg, Stage::kTwo, Variant::kRgbBaseline).values) /
                         static_cast<double>(trainable_count(cfg, Stage::kTwo, Variant::kOurs).values);
    CHECK(ratio < 3.2);
    if (k == 4096) CHECK(ratio == doctest::Approx(3.2).epsilon(1e-6));
  }
  const CountConfig none{64, 32, 0, 0, 500};
  CHECK(trainable_count(none, Stage::kTwo, Variant::kOurs).values ==
        trainable_count(none, Stage::kTwo, Variant::kRgbBaseline).values);
}
