#pragma once

// Test-side oracles, kept independent of the library's computation paths:
// direct periodic convolution sums, grid-refinement prox minimization,
// central finite differences, and the explicit subset-sum form of the
// theta recursion.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "proxipm/image.hpp"

namespace oracles {

/// Periodic convolution by the direct O(n^2) definition.
inline proxipm::ImageTensor direct_periodic_convolution(
    const proxipm::ImageTensor& x, const Eigen::ArrayXXd& kernel) {
  const int h = x.height, w = x.width;
  const int rh = static_cast<int>(kernel.rows()) / 2;
  const int rw = static_cast<int>(kernel.cols()) / 2;
  proxipm::ImageTensor out = x.like();
  for (int c = 0; c < x.channels; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int u = -rh; u <= rh; ++u)
          for (int v = -rw; v <= rw; ++v) {
            const int ii = ((i - u) % h + h) % h;
            const int jj = ((j - v) % w + w) % w;
            acc += kernel(u + rh, v + rw) * x.at(c, ii, jj);
          }
        out.at(c, i, j) = acc;
      }
  return out;
}

/// Minimizes 0.5||x-u||^2 + weight*B(u) by dense grid search plus repeated
/// local refinement. barrier returns +inf outside the strict interior.
inline Eigen::VectorXd grid_refine_prox(
    const Eigen::VectorXd& x, double weight,
    const std::function<double(const Eigen::VectorXd&)>& barrier,
    Eigen::VectorXd lo, Eigen::VectorXd hi, int rounds = 30,
    int grid = 41) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd lo0 = lo, hi0 = hi;
  auto objective = [&](const Eigen::VectorXd& u) {
    const double b = barrier(u);
    if (!std::isfinite(b)) return std::numeric_limits<double>::infinity();
    return 0.5 * (x - u).squaredNorm() + weight * b;
  };

  Eigen::VectorXd best = 0.5 * (lo + hi);
  double best_value = objective(best);
  Eigen::VectorXd point(n);
  for (int round = 0; round < rounds; ++round) {
    if (n == 1) {
      for (int i = 0; i < grid; ++i) {
        point[0] = lo[0] + (hi[0] - lo[0]) * i / (grid - 1);
        const double v = objective(point);
        if (v < best_value) {
          best_value = v;
          best = point;
        }
      }
    } else {
      for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
          point[0] = lo[0] + (hi[0] - lo[0]) * i / (grid - 1);
          point[1] = lo[1] + (hi[1] - lo[1]) * j / (grid - 1);
          const double v = objective(point);
          if (v < best_value) {
            best_value = v;
            best = point;
          }
        }
    }
    for (Eigen::Index d = 0; d < n; ++d) {
      const double cell = (hi[d] - lo[d]) / (grid - 1);
      lo[d] = std::max(lo0[d], best[d] - 3.0 * cell);
      hi[d] = std::min(hi0[d], best[d] + 3.0 * cell);
    }
  }
  return best;
}

template <class F>
double central_diff(const F& f, double x0, double step) {
  return (f(x0 + step) - f(x0 - step)) / (2.0 * step);
}

inline double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

/// Explicit subset-sum form of the theta sequence: sum over all breakpoint
/// subsets S of {0..k-1} of the product of segment norms, where
/// norm(l..k) = max_p |prod_{j=l..k} beta_j^(p)|.
inline std::vector<double> theta_explicit(
    const std::vector<Eigen::ArrayXd>& spectra) {
  const int K = static_cast<int>(spectra.size());
  auto segment_norm = [&](int l, int k) {
    Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(spectra.front().size());
    for (int j = l; j <= k; ++j) prod *= spectra[j];
    return prod.abs().maxCoeff();
  };
  std::vector<double> theta(K);
  for (int k = 0; k < K; ++k) {
    double total = 0.0;
    const unsigned subsets = 1u << k;  // subsets of breakpoints {0..k-1}
    for (unsigned mask = 0; mask < subsets; ++mask) {
      double prod = 1.0;
      int start = 0;
      for (int b = 0; b < k; ++b)
        if (mask & (1u << b)) {
          prod *= segment_norm(start, b);
          start = b + 1;
        }
      prod *= segment_norm(start, k);
      total += prod;
    }
    theta[k] = total;
  }
  return theta;
}

}  // namespace oracles
