#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "proxipm/image.hpp"
#include "proxipm/rng.hpp"

namespace testutil {

inline Eigen::VectorXd random_vector(proxipm::Rng& rng, int n,
                                     double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline proxipm::ImageTensor random_image(proxipm::Rng& rng, int c, int h,
                                         int w, double lo = 0.05,
                                         double hi = 0.95) {
  proxipm::ImageTensor img(c, h, w);
  for (Eigen::Index i = 0; i < img.data.size(); ++i)
    img.data[i] = rng.uniform(lo, hi);
  return img;
}

/// Structured synthetic patch: smooth color field plus random rectangles and
/// ellipses with hard edges, so blur is destructive and TV restoration
/// meaningful. Values stay in [0.05, 0.95].
inline proxipm::ImageTensor synthetic_patch(std::uint64_t seed, int channels,
                                            int h, int w) {
  proxipm::Rng rng(seed);
  proxipm::ImageTensor img(channels, h, w);

  // Smooth background gradient per channel.
  for (int c = 0; c < channels; ++c) {
    const double fx = rng.uniform(0.3, 2.0), fy = rng.uniform(0.3, 2.0);
    const double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28);
    const double base = rng.uniform(0.3, 0.7), amp = rng.uniform(0.1, 0.2);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        img.at(c, i, j) =
            base + amp * std::sin(fy * 6.28 * i / h + py) *
                       std::cos(fx * 6.28 * j / w + px);
  }

  const int shapes = 4 + static_cast<int>(rng.next_u64() % 4);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double ci = rng.uniform(0.1, 0.9) * h;
    const double cj = rng.uniform(0.1, 0.9) * w;
    const double ri = rng.uniform(0.08, 0.3) * h;
    const double rj = rng.uniform(0.08, 0.3) * w;
    double color[3];
    for (int c = 0; c < 3; ++c) color[c] = rng.uniform(0.1, 0.9);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double di = (i - ci) / ri, dj = (j - cj) / rj;
        const bool inside = ellipse ? (di * di + dj * dj <= 1.0)
                                    : (std::abs(di) <= 1.0 &&
                                       std::abs(dj) <= 1.0);
        if (inside)
          for (int c = 0; c < channels; ++c)
            img.at(c, i, j) = color[c % 3];
      }
  }

  img.data = img.data.max(0.05).min(0.95);
  return img;
}

inline std::vector<proxipm::ImageTensor> synthetic_dataset(std::uint64_t seed,
                                                           int count,
                                                           int channels,
                                                           int h, int w) {
  std::vector<proxipm::ImageTensor> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(synthetic_patch(proxipm::mix_seed(seed, i), channels, h, w));
  return out;
}

}  // namespace testutil
