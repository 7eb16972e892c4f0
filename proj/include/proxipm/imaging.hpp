#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "proxipm/image.hpp"
#include "proxipm/linops.hpp"

namespace proxipm {

/// Synthetic degradation: periodic blur plus additive white Gaussian noise.
/// sigma is drawn uniformly from [sigma_lo, sigma_hi] per image when the two
/// differ; draws derive from mix_seed(seed, image_index).
struct DegradationConfig {
  std::string kernel_spec = "gaussian:1.6";
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  std::uint64_t seed = 0;
  bool normalize_kernel = true;

  static DegradationConfig fixed_sigma(std::string kernel, double sigma,
                                       std::uint64_t seed) {
    return DegradationConfig{std::move(kernel), sigma, sigma, seed, true};
  }
};

struct DegradeOutput {
  ImageTensor image;
  double sigma = 0.0;  // the sigma actually drawn for this image
};

DegradeOutput degrade(const ImageTensor& truth, const DegradationConfig& cfg,
                      std::uint64_t image_index = 0);
DegradeOutput degrade(const ImageTensor& truth, const CirculantOperator& blur,
                      const DegradationConfig& cfg,
                      std::uint64_t image_index = 0);

/// Robust noise level from the diagonal subband of a one-level 2-D Haar
/// transform: median(|HH|)/0.6745 per channel, channels combined by median.
/// Odd trailing row/column is cropped.
double estimate_noise_std(const ImageTensor& y);

/// Windowed SSIM, 11x11 Gaussian window with std 1.5, c1 = 0.01^2,
/// c2 = 0.03^2 on dynamic range 1; mean over pixels and channels.
/// border_exclude drops that many pixels on every side from the mean.
double ssim(const ImageTensor& x, const ImageTensor& truth,
            int border_exclude = 0);

/// SSIM and its gradient w.r.t. x in one pass.
std::pair<double, ImageTensor> ssim_value_grad(const ImageTensor& x,
                                               const ImageTensor& truth,
                                               int border_exclude = 0);

ImageTensor ssim_grad(const ImageTensor& x, const ImageTensor& truth,
                      int border_exclude = 0);

/// 10*log10(1/MSE); +infinity when MSE = 0.
double psnr(const ImageTensor& x, const ImageTensor& truth,
            int border_exclude = 0);

/// 8-bit grayscale or RGB PNG mapped to [0,1] by /255.
ImageTensor load_png(const std::string& path);

/// Clamps to [0,1], rounds half-up to 8-bit; written atomically
/// (temp file + rename).
void save_png(const std::string& path, const ImageTensor& img);

}  // namespace proxipm
