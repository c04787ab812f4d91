#include "sig/triplane/triplane_ops.hpp"

#include <memory>

#include "sig/common/parallel.hpp"
#include "sig/triplane/triplane.hpp"

namespace sig::triplane {

using grad::Shape;
using grad::Tape;

namespace {

constexpr std::int64_t kGrain = 2048;

template <typename T>
struct Corner {
  std::int64_t offset;  // element offset of the node's feature vector
  T weight;
};

// Four corners of a bilinear lookup inside a plane starting at `base`.
template <typename T>
void corners(const BilinearTap<T>& tap, int k, int f, std::int64_t base, Corner<T>* out) {
  auto node = [&](int v, int u) { return base + (static_cast<std::int64_t>(v) * k + u) * f; };
  out[0] = {node(tap.v0, tap.u0), (T(1) - tap.wu) * (T(1) - tap.wv)};
  out[1] = {node(tap.v0, tap.u1), tap.wu * (T(1) - tap.wv)};
  out[2] = {node(tap.v1, tap.u0), (T(1) - tap.wu) * tap.wv};
  out[3] = {node(tap.v1, tap.u1), tap.wu * tap.wv};
}

// Gathers sum over `per_point` corners for each point; records the op with a
// scatter-add backward that runs in point order.
template <typename T>
Var<T> gather_op(const char* name, const Var<T>& source, std::int64_t points, int f, int per_point,
                 std::shared_ptr<std::vector<Corner<T>>> taps) {
  std::vector<T> out(static_cast<std::size_t>(points) * f, T(0));
  const auto& src = source.value();
  parallel_chunks(points, kGrain, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p) {
      T* dst = out.data() + p * f;
      for (int c = 0; c < per_point; ++c) {
        const auto& corner = (*taps)[p * per_point + c];
        const T* node = src.data() + corner.offset;
        for (int i = 0; i < f; ++i) dst[i] += corner.weight * node[i];
      }
    }
  });
  const int is = source.id();
  return source.tape().record(name, std::move(out), {points, f}, {source},
                              [is, points, f, per_point, taps](Tape<T>& t, std::span<const T> g) {
                                auto dst = t.grad(is);
                                for (std::int64_t p = 0; p < points; ++p) {
                                  const T* gp = g.data() + p * f;
                                  for (int c = 0; c < per_point; ++c) {
                                    const auto& corner = (*taps)[p * per_point + c];
                                    T* node = dst.data() + corner.offset;
                                    for (int i = 0; i < f; ++i) node[i] += corner.weight * gp[i];
                                  }
                                }
                              });
}

}  // namespace

template <typename T>
Var<T> sample_plane_op(const Var<T>& plane, std::span<const T> uv) {
  const auto& s = plane.shape();
  if (s.size() != 3 || s[0] != s[1]) throw_shape_error("sample_plane_op expects [K, K, F], got " + grad::shape_string(s));
  if (uv.size() % 2 != 0) throw_shape_error("sample_plane_op expects (u, v) pairs");
  const int k = static_cast<int>(s[0]), f = static_cast<int>(s[2]);
  const auto points = static_cast<std::int64_t>(uv.size() / 2);
  auto taps = std::make_shared<std::vector<Corner<T>>>(points * 4);
  for (std::int64_t p = 0; p < points; ++p) corners(bilinear_tap(uv[2 * p], uv[2 * p + 1], k), k, f, 0, &(*taps)[p * 4]);
  return gather_op("sample_plane", plane, points, f, 4, std::move(taps));
}

template <typename T>
Var<T> query_points(const Var<T>& planes, std::span<const T> xyz) {
  const auto& s = planes.shape();
  if (s.size() != 4 || s[0] != kPlaneCount || s[1] != s[2]) {
    throw_shape_error("query_points expects [3, K, K, F], got " + grad::shape_string(s));
  }
  if (xyz.size() % 3 != 0) throw_shape_error("query_points expects (x, y, z) triples");
  const int k = static_cast<int>(s[1]), f = static_cast<int>(s[3]);
  const auto points = static_cast<std::int64_t>(xyz.size() / 3);
  const std::int64_t plane_stride = static_cast<std::int64_t>(k) * k * f;
  auto taps = std::make_shared<std::vector<Corner<T>>>(points * 12);
  parallel_chunks(points, kGrain, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p) {
      const T* q = xyz.data() + 3 * p;
      for (int pl = 0; pl < kPlaneCount; ++pl) {
        const auto uv = project(pl, q[0], q[1], q[2]);
        corners(bilinear_tap(uv[0], uv[1], k), k, f, pl * plane_stride, &(*taps)[p * 12 + pl * 4]);
      }
    }
  });
  return gather_op("query_points", planes, points, f, 12, std::move(taps));
}

template <typename T>
Var<T> weighted_basis(const Var<T>& basis, const Var<T>& coeffs) {
  const auto& s = basis.shape();
  if (s.size() != 5 || s[1] != kPlaneCount) throw_shape_error("weighted_basis expects [M, 3, K, K, F], got " + grad::shape_string(s));
  const std::int64_t m = s[0];
  if (coeffs.shape().size() != 1 || coeffs.shape()[0] != m) {
    throw_shape_error("weighted_basis: " + std::to_string(coeffs.size()) + " coefficients for " + std::to_string(m) +
                      " basis members");
  }
  const std::int64_t member = s[1] * s[2] * s[3] * s[4];
  const auto& bv = basis.value();
  const auto& w = coeffs.value();
  std::vector<T> out(static_cast<std::size_t>(member), T(0));
  for (std::int64_t k = 0; k < m; ++k)
    for (std::int64_t i = 0; i < member; ++i) out[i] += w[k] * bv[k * member + i];
  const int ib = basis.id(), iw = coeffs.id();
  return basis.tape().record("weighted_basis", std::move(out), Shape{s[1], s[2], s[3], s[4]}, {basis, coeffs},
                             [ib, iw, m, member](Tape<T>& t, std::span<const T> g) {
                               if (t.requires_grad(ib)) {
                                 const auto& w = t.value(iw);
                                 auto db = t.grad(ib);
                                 for (std::int64_t k = 0; k < m; ++k)
                                   for (std::int64_t i = 0; i < member; ++i) db[k * member + i] += w[k] * g[i];
                               }
                               if (t.requires_grad(iw)) {
                                 const auto& bv = t.value(ib);
                                 auto dw = t.grad(iw);
                                 for (std::int64_t k = 0; k < m; ++k) {
                                   T acc = 0;
                                   for (std::int64_t i = 0; i < member; ++i) acc += bv[k * member + i] * g[i];
                                   dw[k] += acc;
                                 }
                               }
                             });
}

template <typename T>
Var<T> concat_features(const Var<T>& first, const Var<T>& second) {
  const auto& a = first.shape();
  const auto& b = second.shape();
  if (a.size() != 4 || b.size() != 4 || a[0] != b[0] || a[1] != b[1] || a[2] != b[2]) {
    throw_shape_error("concat_features: " + grad::shape_string(a) + " vs " + grad::shape_string(b));
  }
  const std::int64_t cells = a[0] * a[1] * a[2], fa = a[3], fb = b[3], f = fa + fb;
  std::vector<T> out(static_cast<std::size_t>(cells * f));
  const auto& av = first.value();
  const auto& bv = second.value();
  for (std::int64_t c = 0; c < cells; ++c) {
    std::copy_n(av.data() + c * fa, fa, out.data() + c * f);
    std::copy_n(bv.data() + c * fb, fb, out.data() + c * f + fa);
  }
  const int ia = first.id(), ib = second.id();
  return first.tape().record("concat_features", std::move(out), Shape{a[0], a[1], a[2], f}, {first, second},
                             [ia, ib, cells, fa, fb, f](Tape<T>& t, std::span<const T> g) {
                               if (t.requires_grad(ia)) {
                                 auto d = t.grad(ia);
                                 for (std::int64_t c = 0; c < cells; ++c)
                                   for (std::int64_t i = 0; i < fa; ++i) d[c * fa + i] += g[c * f + i];
                               }
                               if (t.requires_grad(ib)) {
                                 auto d = t.grad(ib);
                                 for (std::int64_t c = 0; c < cells; ++c)
                                   for (std::int64_t i = 0; i < fb; ++i) d[c * fb + i] += g[c * f + fa + i];
                               }
                             });
}

#define SIG_INSTANTIATE_TRIPLANE_OPS(T)                                    \
  template Var<T> sample_plane_op<T>(const Var<T>&, std::span<const T>);   \
  template Var<T> query_points<T>(const Var<T>&, std::span<const T>);      \
  template Var<T> weighted_basis<T>(const Var<T>&, const Var<T>&);         \
  template Var<T> concat_features<T>(const Var<T>&, const Var<T>&);

SIG_INSTANTIATE_TRIPLANE_OPS(float)
SIG_INSTANTIATE_TRIPLANE_OPS(double)

}  // namespace sig::triplane
