#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sig/grad/tape.hpp"

namespace sig::grad {

enum class Activation { kIdentity, kSilu, kSoftplus, kSigmoid };

/// Scalar activation and its derivative, shared by the tape op and by the
/// plain forward paths.
template <typename T>
T activate_scalar(Activation act, T x);
template <typename T>
T activate_derivative(Activation act, T x);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& a, T factor);

template <typename T>
Var<T> sum(const Var<T>& a);

template <typename T>
Var<T> mean(const Var<T>& a);

/// Mean squared error over all elements; shapes must match.
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

/// sum_k weights[k] * terms[k] over scalar terms.
template <typename T>
Var<T> linear_combination(std::span<const Var<T>> terms, std::span<const T> weights);

/// x [N, in] times weight [out, in] transposed plus bias [out] -> [N, out].
template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> activate(const Var<T>& x, Activation act);

/// Contiguous sub-range [offset, offset + numel(shape)) of a tensor, viewed
/// with a new shape. Used to carve layer tensors out of flat groups.
template <typename T>
Var<T> slice(const Var<T>& x, std::int64_t offset, Shape shape);

/// Columns [begin, end) of a [N, C] tensor -> [N, end - begin].
template <typename T>
Var<T> columns(const Var<T>& x, std::int64_t begin, std::int64_t end);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

}  // namespace sig::grad
