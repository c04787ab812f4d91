#include "sig/ae/conv.hpp"

#include <Eigen/Core>
#include <memory>

namespace sig::ae {

using grad::Shape;
using grad::Tape;

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// cols[(oy * wo + ox), (ky * 3 + kx) * cin + c] = x[oy*s + ky - 1, ox*s + kx - 1, c]
template <typename T>
void im2col(const T* x, int h, int w, int cin, int stride, RowMatrix<T>& cols) {
  const int ho = h / stride, wo = w / stride;
  cols.setZero(static_cast<Eigen::Index>(ho) * wo, 9 * cin);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      T* row = cols.data() + (static_cast<std::int64_t>(oy) * wo + ox) * 9 * cin;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= w) continue;
          const T* src = x + (static_cast<std::int64_t>(iy) * w + ix) * cin;
          std::copy(src, src + cin, row + (ky * 3 + kx) * cin);
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const RowMatrix<T>& dcols, int h, int w, int cin, int stride, T* dx) {
  const int ho = h / stride, wo = w / stride;
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const T* row = dcols.data() + (static_cast<std::int64_t>(oy) * wo + ox) * 9 * cin;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= w) continue;
          T* dst = dx + (static_cast<std::int64_t>(iy) * w + ix) * cin;
          const T* src = row + (ky * 3 + kx) * cin;
          for (int c = 0; c < cin; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv3x3(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 3 || ws.size() != 4 || ws[1] != 3 || ws[2] != 3 || ws[3] != xs[2] || bias.shape() != Shape{ws[0]}) {
    throw_shape_error("conv3x3: x " + grad::shape_string(xs) + ", weight " + grad::shape_string(ws) + ", bias " +
                      grad::shape_string(bias.shape()));
  }
  if (stride < 1 || xs[0] % stride != 0 || xs[1] % stride != 0) {
    throw_shape_error("conv3x3: image " + grad::shape_string(xs) + " not divisible by stride " + std::to_string(stride));
  }
  const int h = static_cast<int>(xs[0]), w = static_cast<int>(xs[1]), cin = static_cast<int>(xs[2]);
  const int cout = static_cast<int>(ws[0]);
  const int ho = h / stride, wo = w / stride;
  auto cols = std::make_shared<RowMatrix<T>>();
  im2col(x.value().data(), h, w, cin, stride, *cols);
  std::vector<T> out(static_cast<std::size_t>(ho) * wo * cout);
  {
    Eigen::Map<const RowMatrix<T>> W(weight.value().data(), cout, 9 * cin);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value().data(), cout);
    Eigen::Map<RowMatrix<T>> Y(out.data(), static_cast<Eigen::Index>(ho) * wo, cout);
    Y.noalias() = (*cols) * W.transpose();
    Y.rowwise() += b;
  }
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape().record(
      "conv3x3", std::move(out), Shape{ho, wo, cout}, {x, weight, bias},
      [=](Tape<T>& t, std::span<const T> g) {
        Eigen::Map<const RowMatrix<T>> G(g.data(), static_cast<Eigen::Index>(ho) * wo, cout);
        if (t.requires_grad(iw)) {
          Eigen::Map<RowMatrix<T>> dW(t.grad(iw).data(), cout, 9 * cin);
          dW.noalias() += G.transpose() * (*cols);
        }
        if (t.requires_grad(ib)) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(t.grad(ib).data(), cout);
          db += G.colwise().sum();
        }
        if (t.requires_grad(ix)) {
          Eigen::Map<const RowMatrix<T>> W(t.value(iw).data(), cout, 9 * cin);
          RowMatrix<T> dcols = G * W;
          col2im_add(dcols, h, w, cin, stride, t.grad(ix).data());
        }
      });
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int factor) {
  const auto& xs = x.shape();
  if (xs.size() != 3 || factor < 1) throw_shape_error("upsample_nearest: bad input " + grad::shape_string(xs));
  if (factor == 1) return x;
  const std::int64_t h = xs[0], w = xs[1], c = xs[2];
  const std::int64_t ho = h * factor, wo = w * factor;
  std::vector<T> out(static_cast<std::size_t>(ho * wo * c));
  const auto& xv = x.value();
  for (std::int64_t y = 0; y < ho; ++y)
    for (std::int64_t xx = 0; xx < wo; ++xx)
      std::copy_n(xv.data() + ((y / factor) * w + xx / factor) * c, c, out.data() + (y * wo + xx) * c);
  const int id = x.id();
  return x.tape().record("upsample", std::move(out), Shape{ho, wo, c}, {x}, [=](Tape<T>& t, std::span<const T> g) {
    auto dst = t.grad(id);
    for (std::int64_t y = 0; y < ho; ++y)
      for (std::int64_t xx = 0; xx < wo; ++xx) {
        T* d = dst.data() + ((y / factor) * w + xx / factor) * c;
        const T* s = g.data() + (y * wo + xx) * c;
        for (std::int64_t k = 0; k < c; ++k) d[k] += s[k];
      }
  });
}

template Var<float> conv3x3<float>(const Var<float>&, const Var<float>&, const Var<float>&, int);
template Var<double> conv3x3<double>(const Var<double>&, const Var<double>&, const Var<double>&, int);
template Var<float> upsample_nearest<float>(const Var<float>&, int);
template Var<double> upsample_nearest<double>(const Var<double>&, int);

}  // namespace sig::ae
