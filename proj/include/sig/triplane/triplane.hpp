#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sig/common/error.hpp"

namespace sig::triplane {

/// Plane order inside a Tri-Plane and the coordinate pair each one sees.
enum PlaneAxis : int { kXY = 0, kXZ = 1, kYZ = 2 };
inline constexpr int kPlaneCount = 3;

/// Three K x K x F feature planes stored contiguously as [plane][v][u][f].
template <typename T>
struct TriPlane {
  int resolution = 0;
  int features = 0;
  std::vector<T> data;

  static TriPlane zeros(int k, int f) {
    return TriPlane{k, f, std::vector<T>(static_cast<std::size_t>(kPlaneCount) * k * k * f, T(0))};
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(resolution) * resolution * features; }
  std::span<const T> plane(int p) const { return std::span<const T>(data).subspan(p * plane_size(), plane_size()); }
  std::span<T> plane(int p) { return std::span<T>(data).subspan(p * plane_size(), plane_size()); }
  std::size_t index(int p, int v, int u, int f) const {
    return ((static_cast<std::size_t>(p) * resolution + v) * resolution + u) * features + f;
  }
};

/// M shared Tri-Planes, stored as [M][plane][v][u][f].
template <typename T>
struct BasisSet {
  int count = 0;
  int resolution = 0;
  int features = 0;
  std::vector<T> data;

  std::size_t member_size() const { return static_cast<std::size_t>(kPlaneCount) * resolution * resolution * features; }
};

/// Scene-specific micro planes plus one scalar coefficient per basis member.
template <typename T>
struct MicroMacroTriPlane {
  TriPlane<T> micro;
  std::vector<T> coeffs;
};

/// Grid cell and weights of a bilinear lookup. Nodes sit at
/// u = -1 + 2 i / (K - 1); coordinates outside [-1, 1] clamp to the border.
template <typename T>
struct BilinearTap {
  int u0, u1, v0, v1;
  T wu, wv;  // weight of u1 / v1
};

template <typename T>
inline void axis_tap(T coord, int k, int& i0, int& i1, T& w) {
  if (k == 1) {
    i0 = i1 = 0;
    w = T(0);
    return;
  }
  const T c = std::clamp(coord, T(-1), T(1));
  const T g = (c + T(1)) * T(0.5) * static_cast<T>(k - 1);
  i0 = std::min(static_cast<int>(std::floor(g)), k - 2);
  i1 = i0 + 1;
  w = g - static_cast<T>(i0);
}

template <typename T>
inline BilinearTap<T> bilinear_tap(T u, T v, int k) {
  BilinearTap<T> tap{};
  axis_tap(u, k, tap.u0, tap.u1, tap.wu);
  axis_tap(v, k, tap.v0, tap.v1, tap.wv);
  return tap;
}

/// Coordinates seen by plane p for point (x, y, z).
template <typename T>
inline std::array<T, 2> project(int p, T x, T y, T z) {
  switch (p) {
    case kXY: return {x, y};
    case kXZ: return {x, z};
    default: return {y, z};
  }
}

/// Bilinearly interpolated feature vector of one K x K x F plane.
template <typename T>
std::vector<T> sample_plane(std::span<const T> plane, int k, int f, T u, T v);

/// Sum of the three plane samples at the projections (x,y), (x,z), (y,z).
template <typename T>
std::vector<T> query_point(const TriPlane<T>& planes, T x, T y, T z);

/// Micro features followed by sum_k w_k B_k along the feature axis.
template <typename T>
TriPlane<T> compose(const MicroMacroTriPlane<T>& mm, const BasisSet<T>& basis);

}  // namespace sig::triplane
