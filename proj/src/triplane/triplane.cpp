#include "sig/triplane/triplane.hpp"

#include <string>

namespace sig::triplane {

template <typename T>
std::vector<T> sample_plane(std::span<const T> plane, int k, int f, T u, T v) {
  if (static_cast<std::size_t>(k) * k * f != plane.size()) throw_shape_error("sample_plane: plane size does not match K*K*F");
  const auto tap = bilinear_tap(u, v, k);
  const T w00 = (T(1) - tap.wu) * (T(1) - tap.wv), w10 = tap.wu * (T(1) - tap.wv);
  const T w01 = (T(1) - tap.wu) * tap.wv, w11 = tap.wu * tap.wv;
  auto at = [&](int vi, int ui) { return plane.data() + (static_cast<std::size_t>(vi) * k + ui) * f; };
  const T* a = at(tap.v0, tap.u0);
  const T* b = at(tap.v0, tap.u1);
  const T* c = at(tap.v1, tap.u0);
  const T* d = at(tap.v1, tap.u1);
  std::vector<T> out(f);
  for (int i = 0; i < f; ++i) out[i] = w00 * a[i] + w10 * b[i] + w01 * c[i] + w11 * d[i];
  return out;
}

template <typename T>
std::vector<T> query_point(const TriPlane<T>& planes, T x, T y, T z) {
  std::vector<T> out(planes.features, T(0));
  for (int p = 0; p < kPlaneCount; ++p) {
    const auto uv = project(p, x, y, z);
    const auto s = sample_plane(planes.plane(p), planes.resolution, planes.features, uv[0], uv[1]);
    for (int i = 0; i < planes.features; ++i) out[i] += s[i];
  }
  return out;
}

template <typename T>
TriPlane<T> compose(const MicroMacroTriPlane<T>& mm, const BasisSet<T>& basis) {
  const int k = mm.micro.resolution;
  if (basis.count < 1) throw_shape_error("compose: basis set is empty");
  if (basis.resolution != k) {
    throw_shape_error("compose: micro resolution " + std::to_string(k) + " != basis resolution " +
                      std::to_string(basis.resolution));
  }
  if (static_cast<int>(mm.coeffs.size()) != basis.count) {
    throw_shape_error("compose: " + std::to_string(mm.coeffs.size()) + " coefficients for " +
                      std::to_string(basis.count) + " basis members");
  }
  if (basis.data.size() != basis.member_size() * basis.count) throw_shape_error("compose: basis storage size");
  const int fmic = mm.micro.features, fmac = basis.features, f = fmic + fmac;
  auto out = TriPlane<T>::zeros(k, f);
  const std::size_t cells = static_cast<std::size_t>(kPlaneCount) * k * k;
  for (std::size_t c = 0; c < cells; ++c) {
    for (int i = 0; i < fmic; ++i) out.data[c * f + i] = mm.micro.data[c * fmic + i];
    for (int m = 0; m < basis.count; ++m) {
      const T w = mm.coeffs[m];
      const T* src = basis.data.data() + m * basis.member_size() + c * fmac;
      for (int i = 0; i < fmac; ++i) out.data[c * f + fmic + i] += w * src[i];
    }
  }
  return out;
}

template std::vector<float> sample_plane<float>(std::span<const float>, int, int, float, float);
template std::vector<double> sample_plane<double>(std::span<const double>, int, int, double, double);
template std::vector<float> query_point<float>(const TriPlane<float>&, float, float, float);
template std::vector<double> query_point<double>(const TriPlane<double>&, double, double, double);
template TriPlane<float> compose<float>(const MicroMacroTriPlane<float>&, const BasisSet<float>&);
template TriPlane<double> compose<double>(const MicroMacroTriPlane<double>&, const BasisSet<double>&);

}  // namespace sig::triplane
