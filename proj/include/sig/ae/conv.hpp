#pragma once

#include "sig/grad/tape.hpp"

namespace sig::ae {

using grad::Var;

/// 3x3 convolution with zero padding 1 over HWC images.
/// x [H, W, Cin], weight [Cout, 3, 3, Cin], bias [Cout] -> [H/s, W/s, Cout].
/// H and W must be divisible by the stride s.
template <typename T>
Var<T> conv3x3(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride);

/// Nearest-neighbour upsampling [H, W, C] -> [fH, fW, C].
template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int factor);

}  // namespace sig::ae
