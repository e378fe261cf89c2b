#pragma once

#include <vector>

#include "nslf/core/image.hpp"

namespace nslf {

inline constexpr double kPsnrCap = 99.0;

/// Mean squared error over the RGB channels of mutually valid pixels. Throws ShapeError on a size
/// mismatch and DomainError when no pixel is valid in both.
double mse(const Image& a, const Image& b);
/// 10 log10(1 / MSE), capped at kPsnrCap.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Luma 0.299 R + 0.587 G + 0.114 B, in double precision.
std::vector<double> luma(const Image& img);

/// Mean SSIM over all fully-inside windows of the luma images (Gaussian weights). When either
/// image has a mask, only windows whose center pixel is valid in both are averaged. Throws
/// ShapeError on size mismatch or images smaller than the window. Parallel over rows.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});
/// Single-threaded reference with identical results.
double ssim_serial(const Image& a, const Image& b, const SsimOptions& options = {});

}  // namespace nslf
