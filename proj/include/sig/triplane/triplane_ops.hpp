#pragma once

#include <span>

#include "sig/grad/tape.hpp"

namespace sig::triplane {

using grad::Var;

/// Bilinear samples of one plane [K, K, F] at P points given as (u, v)
/// pairs -> [P, F]. Differentiable with respect to the plane values.
template <typename T>
Var<T> sample_plane_op(const Var<T>& plane, std::span<const T> uv);

/// Tri-Plane lookup of P points given as (x, y, z) triples against
/// planes [3, K, K, F] -> [P, F]: the sum of the three projected samples.
template <typename T>
Var<T> query_points(const Var<T>& planes, std::span<const T> xyz);

/// sum_k coeffs[k] * basis[k] for basis [M, 3, K, K, F] -> [3, K, K, F].
template <typename T>
Var<T> weighted_basis(const Var<T>& basis, const Var<T>& coeffs);

/// Feature-axis concatenation of [3, K, K, Fa] and [3, K, K, Fb].
template <typename T>
Var<T> concat_features(const Var<T>& first, const Var<T>& second);

}  // namespace sig::triplane
