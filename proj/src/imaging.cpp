#include "proxipm/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "proxipm/rng.hpp"

namespace proxipm {

namespace {

constexpr int kWindowSize = 11;
constexpr double kWindowStd = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const Eigen::ArrayXd& ssim_window() {
  static const Eigen::ArrayXd taps = [] {
    Eigen::ArrayXd w(kWindowSize);
    const int r = kWindowSize / 2;
    for (int i = -r; i <= r; ++i)
      w[i + r] = std::exp(-(i * i) / (2.0 * kWindowStd * kWindowStd));
    w /= w.sum();
    return w;
  }();
  return taps;
}

/// Zero-padded separable filtering with a symmetric window; self-adjoint.
void filter_same(const double* in, double* out, int h, int w,
                 const Eigen::ArrayXd& taps, std::vector<double>& scratch) {
  const int r = static_cast<int>(taps.size()) / 2;
  scratch.resize(static_cast<std::size_t>(h) * w);
  // Horizontal pass.
  for (int i = 0; i < h; ++i) {
    const double* row = in + static_cast<std::size_t>(i) * w;
    double* srow = scratch.data() + static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      const int t0 = std::max(-r, -j);
      const int t1 = std::min(r, w - 1 - j);
      for (int t = t0; t <= t1; ++t) acc += taps[t + r] * row[j + t];
      srow[j] = acc;
    }
  }
  // Vertical pass.
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) {
      double acc = 0.0;
      const int t0 = std::max(-r, -i);
      const int t1 = std::min(r, h - 1 - i);
      for (int t = t0; t <= t1; ++t)
        acc += taps[t + r] * scratch[static_cast<std::size_t>(i + t) * w + j];
      out[static_cast<std::size_t>(i) * w + j] = acc;
    }
  }
}

struct SsimAccum {
  double value = 0.0;
  ImageTensor grad;
};

SsimAccum ssim_impl(const ImageTensor& x, const ImageTensor& truth,
                    int border, bool want_grad) {
  require_same_shape(x, truth, "ssim");
  const int h = x.height, w = x.width;
  if (border < 0) throw std::invalid_argument("ssim: negative border");
  if (h - 2 * border <= 0 || w - 2 * border <= 0)
    throw std::invalid_argument("ssim: border excludes the whole image");

  const auto& taps = ssim_window();
  const Eigen::Index n = x.plane_size();
  const double n_valid = static_cast<double>(x.channels) *
                         (h - 2 * border) * (w - 2 * border);

  SsimAccum out;
  if (want_grad) out.grad = x.like();

  std::vector<double> scratch;
  Eigen::ArrayXd mu_x(n), mu_t(n), xx(n), tt(n), xt(n), field(n), tmp(n);
  Eigen::ArrayXd r_field(n), p_field(n), q_field(n);

  for (int ch = 0; ch < x.channels; ++ch) {
    const auto xc = x.channel(ch);
    const auto tc = truth.channel(ch);

    filter_same(xc.data(), mu_x.data(), h, w, taps, scratch);
    filter_same(tc.data(), mu_t.data(), h, w, taps, scratch);
    field = xc * xc;
    filter_same(field.data(), xx.data(), h, w, taps, scratch);
    field = tc * tc;
    filter_same(field.data(), tt.data(), h, w, taps, scratch);
    field = xc * tc;
    filter_same(field.data(), xt.data(), h, w, taps, scratch);

    const Eigen::ArrayXd sigma_x2 = xx - mu_x.square();
    const Eigen::ArrayXd sigma_t2 = tt - mu_t.square();
    const Eigen::ArrayXd sigma_xt = xt - mu_x * mu_t;

    const Eigen::ArrayXd A = 2.0 * mu_x * mu_t + kC1;
    const Eigen::ArrayXd B = 2.0 * sigma_xt + kC2;
    const Eigen::ArrayXd C = mu_x.square() + mu_t.square() + kC1;
    const Eigen::ArrayXd D = sigma_x2 + sigma_t2 + kC2;
    const Eigen::ArrayXd S = (A * B) / (C * D);

    for (int i = border; i < h - border; ++i)
      for (int j = border; j < w - border; ++j)
        out.value += S[static_cast<Eigen::Index>(i) * w + j];

    if (!want_grad) continue;

    const Eigen::ArrayXd cd = C * D;
    const Eigen::ArrayXd dSdA = B / cd;
    const Eigen::ArrayXd dSdB = A / cd;
    const Eigen::ArrayXd dSdC = -S / C;
    const Eigen::ArrayXd dSdD = -S / D;

    r_field = 2.0 * mu_t * dSdA + 2.0 * mu_x * dSdC - 2.0 * mu_x * dSdD -
              2.0 * mu_t * dSdB;
    p_field = dSdD;
    q_field = 2.0 * dSdB;
    if (border > 0) {
      // Only pixels inside the evaluation region contribute to the mean.
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          if (i < border || i >= h - border || j < border || j >= w - border) {
            const Eigen::Index k = static_cast<Eigen::Index>(i) * w + j;
            r_field[k] = 0.0;
            p_field[k] = 0.0;
            q_field[k] = 0.0;
          }
    }

    auto gc = out.grad.channel(ch);
    filter_same(r_field.data(), tmp.data(), h, w, taps, scratch);
    gc = tmp;
    filter_same(p_field.data(), tmp.data(), h, w, taps, scratch);
    gc += 2.0 * xc * tmp;
    filter_same(q_field.data(), tmp.data(), h, w, taps, scratch);
    gc += tc * tmp;
    gc /= n_valid;
  }

  out.value /= n_valid;
  return out;
}

}  // namespace

double ssim(const ImageTensor& x, const ImageTensor& truth,
            int border_exclude) {
  return ssim_impl(x, truth, border_exclude, false).value;
}

std::pair<double, ImageTensor> ssim_value_grad(const ImageTensor& x,
                                               const ImageTensor& truth,
                                               int border_exclude) {
  SsimAccum acc = ssim_impl(x, truth, border_exclude, true);
  return {acc.value, std::move(acc.grad)};
}

ImageTensor ssim_grad(const ImageTensor& x, const ImageTensor& truth,
                      int border_exclude) {
  return ssim_impl(x, truth, border_exclude, true).grad;
}

double psnr(const ImageTensor& x, const ImageTensor& truth,
            int border_exclude) {
  require_same_shape(x, truth, "psnr");
  const int h = x.height, w = x.width, b = border_exclude;
  if (b < 0 || h - 2 * b <= 0 || w - 2 * b <= 0)
    throw std::invalid_argument("psnr: invalid border");
  double mse = 0.0;
  for (int c = 0; c < x.channels; ++c)
    for (int i = b; i < h - b; ++i)
      for (int j = b; j < w - b; ++j) {
        const double d = x.at(c, i, j) - truth.at(c, i, j);
        mse += d * d;
      }
  mse /= static_cast<double>(x.channels) * (h - 2 * b) * (w - 2 * b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double estimate_noise_std(const ImageTensor& y) {
  const int h2 = y.height / 2;
  const int w2 = y.width / 2;
  if (h2 == 0 || w2 == 0)
    throw std::invalid_argument(
        "estimate_noise_std: image too small for a Haar level");
  std::vector<double> per_channel;
  per_channel.reserve(y.channels);
  std::vector<double> coeffs(static_cast<std::size_t>(h2) * w2);
  for (int c = 0; c < y.channels; ++c) {
    std::size_t k = 0;
    for (int i = 0; i < h2; ++i)
      for (int j = 0; j < w2; ++j) {
        const double a = y.at(c, 2 * i, 2 * j);
        const double b = y.at(c, 2 * i, 2 * j + 1);
        const double d = y.at(c, 2 * i + 1, 2 * j);
        const double e = y.at(c, 2 * i + 1, 2 * j + 1);
        coeffs[k++] = std::abs(0.5 * (a - b - d + e));
      }
    const std::size_t mid = coeffs.size() / 2;
    std::nth_element(coeffs.begin(), coeffs.begin() + mid, coeffs.end());
    double med = coeffs[mid];
    if (coeffs.size() % 2 == 0) {
      const double lower =
          *std::max_element(coeffs.begin(), coeffs.begin() + mid);
      med = 0.5 * (med + lower);
    }
    per_channel.push_back(med / 0.6745);
  }
  std::sort(per_channel.begin(), per_channel.end());
  const std::size_t m = per_channel.size() / 2;
  if (per_channel.size() % 2 == 1) return per_channel[m];
  return 0.5 * (per_channel[m - 1] + per_channel[m]);
}

DegradeOutput degrade(const ImageTensor& truth, const CirculantOperator& blur,
                      const DegradationConfig& cfg,
                      std::uint64_t image_index) {
  if (cfg.sigma_lo < 0.0 || cfg.sigma_hi < cfg.sigma_lo)
    throw std::invalid_argument("degrade: invalid sigma range");
  DegradeOutput out;
  out.image = blur.apply(truth);
  Rng rng(mix_seed(cfg.seed, image_index));
  out.sigma = (cfg.sigma_hi > cfg.sigma_lo)
                  ? rng.uniform(cfg.sigma_lo, cfg.sigma_hi)
                  : cfg.sigma_lo;
  if (out.sigma > 0.0)
    for (Eigen::Index i = 0; i < out.image.data.size(); ++i)
      out.image.data[i] += out.sigma * rng.normal();
  return out;
}

DegradeOutput degrade(const ImageTensor& truth, const DegradationConfig& cfg,
                      std::uint64_t image_index) {
  const CirculantOperator blur(
      make_kernel(cfg.kernel_spec, cfg.normalize_kernel), truth.height,
      truth.width);
  return degrade(truth, blur, cfg, image_index);
}

}  // namespace proxipm
