#include "sig/grad/ops.hpp"

#include <Eigen/Core>
#include <cmath>

namespace sig::grad {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw_shape_error(std::string(op) + ": shapes " + shape_string(a) + " and " + shape_string(b) + " differ");
}

}  // namespace

template <typename T>
T activate_scalar(Activation act, T x) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kSilu:
      return x * sigmoid(x);
    case Activation::kSoftplus:
      return x > T(30) ? x : std::log1p(std::exp(x));
    case Activation::kSigmoid:
      return sigmoid(x);
  }
  return x;
}

template <typename T>
T activate_derivative(Activation act, T x) {
  switch (act) {
    case Activation::kIdentity:
      return T(1);
    case Activation::kSilu: {
      const T s = sigmoid(x);
      return s * (T(1) + x * (T(1) - s));
    }
    case Activation::kSoftplus:
      return sigmoid(x);
    case Activation::kSigmoid: {
      const T s = sigmoid(x);
      return s * (T(1) - s);
    }
  }
  return T(1);
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(out), a.shape(), {a, b}, [ia, ib](Tape<T>& t, std::span<const T> g) {
    for (int id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto dst = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  std::vector<T> out(a.value());
  for (auto& v : out) v *= factor;
  const int ia = a.id();
  return a.tape().record("scale", std::move(out), a.shape(), {a}, [ia, factor](Tape<T>& t, std::span<const T> g) {
    auto dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T s = 0;
  for (T v : a.value()) s += v;
  const int ia = a.id();
  return a.tape().record("sum", {s}, {}, {a}, [ia](Tape<T>& t, std::span<const T> g) {
    auto dst = t.grad(ia);
    for (auto& d : dst) d += g[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  if (a.size() == 0) throw_shape_error("mean of an empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.empty()) throw_shape_error("mse of empty tensors");
  T acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const T d = av[i] - bv[i];
    acc += d * d;
  }
  const T inv_n = T(1) / static_cast<T>(av.size());
  const int ia = a.id(), ib = b.id();
  return a.tape().record("mse", {acc * inv_n}, {}, {a, b}, [ia, ib, inv_n](Tape<T>& t, std::span<const T> g) {
    const auto& av = t.value(ia);
    const auto& bv = t.value(ib);
    const T k = T(2) * inv_n * g[0];
    if (t.requires_grad(ia)) {
      auto dst = t.grad(ia);
      for (std::size_t i = 0; i < av.size(); ++i) dst[i] += k * (av[i] - bv[i]);
    }
    if (t.requires_grad(ib)) {
      auto dst = t.grad(ib);
      for (std::size_t i = 0; i < av.size(); ++i) dst[i] -= k * (av[i] - bv[i]);
    }
  });
}

template <typename T>
Var<T> linear_combination(std::span<const Var<T>> terms, std::span<const T> weights) {
  if (terms.empty() || terms.size() != weights.size()) throw_shape_error("linear_combination: term/weight count mismatch");
  T acc = 0;
  std::vector<int> ids;
  std::vector<T> w(weights.begin(), weights.end());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].size() != 1) throw_shape_error("linear_combination expects scalar terms");
    acc += w[k] * terms[k].item();
    ids.push_back(terms[k].id());
  }
  std::vector<Var<T>> inputs(terms.begin(), terms.end());
  return terms[0].tape().record("linear_combination", {acc}, {}, inputs, [ids, w](Tape<T>& t, std::span<const T> g) {
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (t.requires_grad(ids[k])) t.grad(ids[k])[0] += w[k] * g[0];
  });
}

template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || bias.shape().size() != 1 || xs[1] != ws[1] || bias.shape()[0] != ws[0]) {
    throw_shape_error("affine: x " + shape_string(xs) + ", weight " + shape_string(ws) + ", bias " +
                      shape_string(bias.shape()));
  }
  const std::int64_t n = xs[0], in = xs[1], out_dim = ws[0];
  std::vector<T> out(static_cast<std::size_t>(n * out_dim));
  {
    ConstMatMap<T> X(x.value().data(), n, in);
    ConstMatMap<T> W(weight.value().data(), out_dim, in);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value().data(), out_dim);
    MatMap<T> Y(out.data(), n, out_dim);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
  }
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape().record("affine", std::move(out), {n, out_dim}, {x, weight, bias},
                         [ix, iw, ib, n, in, out_dim](Tape<T>& t, std::span<const T> g) {
                           ConstMatMap<T> G(g.data(), n, out_dim);
                           if (t.requires_grad(ix)) {
                             MatMap<T> dX(t.grad(ix).data(), n, in);
                             ConstMatMap<T> W(t.value(iw).data(), out_dim, in);
                             dX.noalias() += G * W;
                           }
                           if (t.requires_grad(iw)) {
                             MatMap<T> dW(t.grad(iw).data(), out_dim, in);
                             ConstMatMap<T> X(t.value(ix).data(), n, in);
                             dW.noalias() += G.transpose() * X;
                           }
                           if (t.requires_grad(ib)) {
                             Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(t.grad(ib).data(), out_dim);
                             db += G.colwise().sum();
                           }
                         });
}

template <typename T>
Var<T> activate(const Var<T>& x, Activation act) {
  if (act == Activation::kIdentity) return x;
  std::vector<T> out(x.value().size());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = activate_scalar(act, xv[i]);
  const int ix = x.id();
  return x.tape().record("activate", std::move(out), x.shape(), {x}, [ix, act](Tape<T>& t, std::span<const T> g) {
    const auto& xv = t.value(ix);
    auto dst = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * activate_derivative(act, xv[i]);
  });
}

template <typename T>
Var<T> slice(const Var<T>& x, std::int64_t offset, Shape shape) {
  const std::int64_t count = numel(shape);
  if (offset < 0 || offset + count > x.size()) {
    throw_shape_error("slice [" + std::to_string(offset) + ", " + std::to_string(offset + count) +
                      ") out of range for " + std::to_string(x.size()) + " values");
  }
  std::vector<T> out(x.value().begin() + offset, x.value().begin() + offset + count);
  const int ix = x.id();
  return x.tape().record("slice", std::move(out), std::move(shape), {x}, [ix, offset](Tape<T>& t, std::span<const T> g) {
    auto dst = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dst[offset + i] += g[i];
  });
}

template <typename T>
Var<T> columns(const Var<T>& x, std::int64_t begin, std::int64_t end) {
  const auto& s = x.shape();
  if (s.size() != 2 || begin < 0 || end > s[1] || begin > end) throw_shape_error("columns: bad range for " + shape_string(s));
  const std::int64_t n = s[0], c = s[1], w = end - begin;
  std::vector<T> out(static_cast<std::size_t>(n * w));
  const auto& xv = x.value();
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t k = 0; k < w; ++k) out[r * w + k] = xv[r * c + begin + k];
  const int ix = x.id();
  return x.tape().record("columns", std::move(out), {n, w}, {x}, [ix, n, c, w, begin](Tape<T>& t, std::span<const T> g) {
    auto dst = t.grad(ix);
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t k = 0; k < w; ++k) dst[r * c + begin + k] += g[r * w + k];
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (numel(shape) != x.size()) throw_shape_error("reshape " + shape_string(x.shape()) + " -> " + shape_string(shape));
  return slice(x, 0, std::move(shape));
}

#define SIG_INSTANTIATE_OPS(T)                                                        \
  template T activate_scalar<T>(Activation, T);                                       \
  template T activate_derivative<T>(Activation, T);                                   \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> scale<T>(const Var<T>&, T);                                         \
  template Var<T> sum<T>(const Var<T>&);                                              \
  template Var<T> mean<T>(const Var<T>&);                                             \
  template Var<T> mse<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> linear_combination<T>(std::span<const Var<T>>, std::span<const T>); \
  template Var<T> affine<T>(const Var<T>&, const Var<T>&, const Var<T>&);             \
  template Var<T> activate<T>(const Var<T>&, Activation);                             \
  template Var<T> slice<T>(const Var<T>&, std::int64_t, Shape);                       \
  template Var<T> columns<T>(const Var<T>&, std::int64_t, std::int64_t);              \
  template Var<T> reshape<T>(const Var<T>&, Shape);

SIG_INSTANTIATE_OPS(float)
SIG_INSTANTIATE_OPS(double)

}  // namespace sig::grad
