#pragma once

#include "sig/common/image.hpp"

namespace sig::metrics {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) for images in [0, 1]; kPsnrCap when MSE is zero.
double psnr(const Image& x, const Image& y);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5,
/// dynamic range 1), averaged over channels. Throws kConfig when either
/// image side is below the window size.
double ssim(const Image& x, const Image& y);

/// Normalised 1D Gaussian taps used by ssim (the 2D window is their outer
/// product).
const double* ssim_taps();

}  // namespace sig::metrics
