#include "proxipm/barrier_prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace proxipm {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_positive(double mu, double gamma) {
  if (!(mu > 0.0)) throw std::invalid_argument("prox: mu must be positive");
  if (!(gamma > 0.0))
    throw std::invalid_argument("prox: gamma must be positive");
}

double cubic_eval(double a, double b, double c, double z) {
  return ((z + a) * z + b) * z + c;
}

double cubic_deriv(double a, double b, double z) {
  return (3.0 * z + 2.0 * a) * z + b;
}

/// Bisection on the monic cubic z^3 + a z^2 + b z + c over a bracketing
/// interval, followed by Newton refinement.
double bisect_cubic(double a, double b, double c, double lo, double hi) {
  double flo = cubic_eval(a, b, c, lo);
  if (flo == 0.0) return lo;
  double fhi = cubic_eval(a, b, c, hi);
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::runtime_error(
        "cubic_root_in_interval: ill-posed input, no sign change over the "
        "interval");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = cubic_eval(a, b, c, mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace

double cubic_root_in_interval(double c3, double c2, double c1, double c0,
                              double lo, double hi) {
  if (!(hi > lo))
    throw std::invalid_argument("cubic_root_in_interval: empty interval");
  if (c3 == 0.0 || !std::isfinite(c3))
    throw std::invalid_argument(
        "cubic_root_in_interval: leading coefficient must be nonzero");

  const double a = c2 / c3;
  const double b = c1 / c3;
  const double c = c0 / c3;

  const double interval_scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  const double residual_scale =
      std::max({interval_scale * interval_scale * interval_scale,
                std::abs(a) * interval_scale * interval_scale,
                std::abs(b) * interval_scale, std::abs(c)});

  // Depressed form t^3 + p t + q with z = t - a/3.
  const double shift = a / 3.0;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a / 27.0) - a * b / 3.0 + c;
  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;
  const double disc_scale =
      std::max(half_q * half_q, std::abs(third_p * third_p * third_p));
  const bool near_degenerate = std::abs(disc) <= 1e-12 * disc_scale;

  std::vector<double> roots;
  if (disc > 0.0 && !near_degenerate) {
    // One real root; pick the cube root that avoids cancellation.
    const double s = std::sqrt(disc);
    const double big = -half_q - std::copysign(s, q);
    const double u = std::cbrt(big);
    const double v = (u == 0.0) ? 0.0 : -p / (3.0 * u);
    roots.push_back(u + v - shift);
  } else if (p < 0.0) {
    const double m = 2.0 * std::sqrt(-third_p);
    double arg = -half_q / std::sqrt(-third_p * third_p * third_p);
    arg = std::clamp(arg, -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
      roots.push_back(m * std::cos(theta - 2.0 * kPi * k / 3.0) - shift);
  } else {
    // p >= 0 with disc <= 0 only happens at the triple-root degeneracy.
    roots.push_back(-shift);
  }

  const double select_tol = 1e-9 * interval_scale;
  std::vector<double> candidates;
  for (double r : roots)
    if (r >= lo - select_tol && r <= hi + select_tol) candidates.push_back(r);
  std::sort(candidates.begin(), candidates.end());

  const double tie_tol = 1e-12 * interval_scale;
  double root;
  if (candidates.size() == 1 && !near_degenerate) {
    root = candidates.front();
  } else if (candidates.size() >= 2 &&
             candidates.back() - candidates.front() > tie_tol &&
             !near_degenerate) {
    throw std::runtime_error(
        "cubic_root_in_interval: ill-posed input, multiple roots in the "
        "interval");
  } else {
    // Near-degenerate roots or an empty analytic candidate set: fall back to
    // safeguarded bisection (throws if nothing is bracketed).
    root = bisect_cubic(a, b, c, lo, hi);
  }

  root = std::clamp(root, lo, hi);

  // One guarded Newton step, then keep polishing only while it helps.
  double f = cubic_eval(a, b, c, root);
  for (int it = 0; it < 40; ++it) {
    const double fp = cubic_deriv(a, b, root);
    if (fp == 0.0) break;
    const double next = root - f / fp;
    if (!(next >= lo && next <= hi)) break;
    const double fn = cubic_eval(a, b, c, next);
    if (std::abs(fn) >= std::abs(f)) break;
    root = next;
    f = fn;
    if (it == 0 && std::abs(f) <= 1e-13 * residual_scale) break;
  }

  if (std::abs(f) > 1e-12 * residual_scale) {
    const double refined = bisect_cubic(a, b, c, lo, hi);
    if (std::abs(cubic_eval(a, b, c, refined)) < std::abs(f)) root = refined;
  }
  return std::clamp(root, lo, hi);
}

Eigen::VectorXd ProxResult::apply_jac(const Eigen::VectorXd& w) const {
  if (jac_diag) return (jac_diag->matrix().array() * w.array()).matrix();
  if (jac_rank1)
    return jac_rank1->scale * w + jac_rank1->u * jac_rank1->v.dot(w);
  throw std::logic_error("ProxResult::apply_jac: derivatives not computed");
}

ProxResult prox_affine(const Eigen::VectorXd& x, const AffineHalfSpace& spec,
                       double mu, double gamma, bool want_derivs) {
  require_positive(mu, gamma);
  const double n2 = spec.a.squaredNorm();
  if (!(n2 > 0.0))
    throw std::invalid_argument("prox_affine: invalid constraint, a = 0");

  const double t = spec.b - spec.a.dot(x);
  const double s = 4.0 * gamma * mu * n2;
  const double root = std::sqrt(t * t + s);
  // t - root rewritten for t >= 0 to avoid cancellation.
  const double diff = (t >= 0.0) ? -s / (t + root) : t - root;

  ProxResult result;
  result.value = x + (diff / (2.0 * n2)) * spec.a;
  if (want_derivs) {
    const double jac_coef = -(1.0 - t / root) / (2.0 * n2);
    result.jac_rank1 = RankOneJacobian{1.0, jac_coef * spec.a, spec.a};
    result.grad_mu = (-gamma / root) * spec.a;
    result.grad_gamma = (-mu / root) * spec.a;
  }
  return result;
}

namespace {

struct SlabRoot {
  double kappa;
  double eta;  // derivative of the defining cubic at kappa; always negative
};

/// Shared core of the hyperslab and box proxes: root of
/// (b_max-z)(b_min-z)(z - sigma) + gamma*mu*(b_max+b_min-2z)*n2 = 0
/// in (b_min, b_max), where sigma = a^T x and n2 = ||a||^2. The Cardano root
/// is refined by safeguarded Newton on the equivalent stationarity form
/// g(z) = z - sigma + gm*(1/(b_max-z) - 1/(z-b_min)), which is strictly
/// increasing and free of the cancellation the expanded cubic suffers near
/// the boundary.
SlabRoot slab_kappa(double sigma, double b_min, double b_max, double mu,
                    double gamma, double n2, bool want_eta) {
  const double gm = gamma * mu * n2;
  const double bsum = b_min + b_max;
  const double c2 = -(bsum + sigma);
  const double c1 = b_min * b_max + sigma * bsum - 2.0 * gm;
  const double c0 = -b_min * b_max * sigma + gm * bsum;
  double kappa = cubic_root_in_interval(1.0, c2, c1, c0, b_min, b_max);
  kappa = std::min(std::max(kappa, std::nextafter(b_min, b_max)),
                   std::nextafter(b_max, b_min));

  double lo = b_min, hi = b_max;  // g(lo+) = -inf, g(hi-) = +inf
  for (int it = 0; it < 100; ++it) {
    const double inv_hi = 1.0 / (b_max - kappa);
    const double inv_lo = 1.0 / (kappa - b_min);
    const double g = kappa - sigma + gm * (inv_hi - inv_lo);
    const double g_scale =
        std::abs(kappa - sigma) + gm * (inv_hi + inv_lo) + 1e-300;
    if (g > 0.0)
      hi = kappa;
    else
      lo = kappa;
    if (std::abs(g) <= 1e-16 * g_scale) break;
    const double gp = 1.0 + gm * (inv_hi * inv_hi + inv_lo * inv_lo);
    double next = kappa - g / gp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == kappa) break;
    kappa = next;
  }
  kappa = std::min(std::max(kappa, std::nextafter(b_min, b_max)),
                   std::nextafter(b_max, b_min));

  SlabRoot out{kappa, 0.0};
  if (want_eta) {
    out.eta = (b_max - kappa) * (b_min - kappa) -
              (bsum - 2.0 * kappa) * (kappa - sigma) - 2.0 * gm;
    const double span = b_max - b_min;
    if (std::abs(out.eta) < 1e-14 * std::max(1.0, span * span))
      throw std::runtime_error(
          "prox: derivative degeneracy, |eta| below tolerance");
  }
  return out;
}

}  // namespace

ProxResult prox_hyperslab(const Eigen::VectorXd& x, const Hyperslab& spec,
                          double mu, double gamma, bool want_derivs) {
  require_positive(mu, gamma);
  if (!(spec.b_min < spec.b_max))
    throw std::invalid_argument(
        "prox_hyperslab: requires b_min < b_max");
  const double n2 = spec.a.squaredNorm();
  if (!(n2 > 0.0))
    throw std::invalid_argument("prox_hyperslab: invalid constraint, a = 0");

  const double sigma = spec.a.dot(x);
  const SlabRoot sr =
      slab_kappa(sigma, spec.b_min, spec.b_max, mu, gamma, n2, want_derivs);

  ProxResult result;
  result.kappa = sr.kappa;
  result.value = x + ((sr.kappa - sigma) / n2) * spec.a;
  if (want_derivs) {
    const double prod = (spec.b_max - sr.kappa) * (spec.b_min - sr.kappa);
    const double bsum2k = spec.b_min + spec.b_max - 2.0 * sr.kappa;
    const double jac_coef = (prod / sr.eta - 1.0) / n2;
    result.jac_rank1 = RankOneJacobian{1.0, jac_coef * spec.a, spec.a};
    result.grad_mu = (-gamma * bsum2k / sr.eta) * spec.a;
    result.grad_gamma = (-mu * bsum2k / sr.eta) * spec.a;
  }
  return result;
}

ProxResult prox_ball(const Eigen::VectorXd& x, const Ball& spec, double mu,
                     double gamma, bool want_derivs) {
  require_positive(mu, gamma);
  if (!(spec.alpha > 0.0))
    throw std::invalid_argument("prox_ball: requires alpha > 0");
  if (spec.center.size() != x.size())
    throw std::invalid_argument("prox_ball: center/point dimension mismatch");

  const double alpha = spec.alpha;
  const double tgm = 2.0 * gamma * mu;
  const Eigen::VectorXd diff = x - spec.center;
  const double d = diff.norm();
  const double sqrt_alpha = std::sqrt(alpha);

  double kappa = cubic_root_in_interval(1.0, -d, -(alpha + tgm), alpha * d,
                                        0.0, sqrt_alpha);
  kappa = std::min(std::max(kappa, 0.0), std::nextafter(sqrt_alpha, 0.0));
  {
    // Safeguarded Newton on the radial stationarity form
    // psi(z) = z + tgm*z/(alpha - z^2) - d, strictly increasing on
    // [0, sqrt(alpha)).
    double lo = 0.0, hi = sqrt_alpha;
    for (int it = 0; it < 100; ++it) {
      const double gap_it = alpha - kappa * kappa;
      const double psi = kappa + tgm * kappa / gap_it - d;
      const double psi_scale = kappa + tgm * kappa / gap_it + d + 1e-300;
      if (psi > 0.0)
        hi = kappa;
      else
        lo = kappa;
      if (std::abs(psi) <= 1e-16 * psi_scale) break;
      const double dpsi =
          1.0 + tgm * (alpha + kappa * kappa) / (gap_it * gap_it);
      double next = kappa - psi / dpsi;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == kappa) break;
      kappa = next;
    }
    kappa = std::min(std::max(kappa, 0.0), std::nextafter(sqrt_alpha, 0.0));
  }

  const double gap = alpha - kappa * kappa;  // alpha - ||phi - c||^2 > 0
  const double ratio = gap / (gap + tgm);

  ProxResult result;
  result.kappa = kappa;
  result.value = spec.center + ratio * diff;
  if (want_derivs) {
    const Eigen::VectorXd phi_c = ratio * diff;
    const Eigen::VectorXd x_phi = (1.0 - ratio) * diff;
    const double den = gap - 2.0 * kappa * kappa + tgm + 2.0 * phi_c.dot(diff);
    if (std::abs(den) < 1e-14 * std::max(1.0, alpha))
      throw std::runtime_error(
          "prox_ball: derivative degeneracy, Sherman-Morrison denominator "
          "below tolerance");
    // J = ratio * M with M = I - 2 (x-phi)(phi-c)^T / den.
    result.jac_rank1 =
        RankOneJacobian{ratio, (-2.0 * ratio / den) * x_phi, phi_c};
    const Eigen::VectorXd m_phi_c =
        phi_c - (2.0 * kappa * kappa / den) * x_phi;
    result.grad_mu = (-2.0 * gamma / (gap + tgm)) * m_phi_c;
    result.grad_gamma = (-2.0 * mu / (gap + tgm)) * m_phi_c;
  }
  return result;
}

ScalarBoxProx box_prox_scalar(double x, double b_min, double b_max, double mu,
                              double gamma, bool want_derivs) {
  const SlabRoot sr = slab_kappa(x, b_min, b_max, mu, gamma, 1.0, want_derivs);
  ScalarBoxProx out;
  out.value = sr.kappa;
  if (want_derivs) {
    const double bsum2k = b_min + b_max - 2.0 * sr.kappa;
    out.jac = (b_max - sr.kappa) * (b_min - sr.kappa) / sr.eta;
    out.grad_mu = -gamma * bsum2k / sr.eta;
    out.grad_gamma = -mu * bsum2k / sr.eta;
  }
  return out;
}

ProxResult prox_box(const Eigen::VectorXd& x, const Box& spec, double mu,
                    double gamma, bool want_derivs) {
  require_positive(mu, gamma);
  if (!(spec.x_min < spec.x_max))
    throw std::invalid_argument("prox_box: requires x_min < x_max");

  const Eigen::Index n = x.size();
  ProxResult result;
  result.value.resize(n);
  if (want_derivs) {
    result.jac_diag = Eigen::ArrayXd(n);
    result.grad_mu = Eigen::VectorXd(n);
    result.grad_gamma = Eigen::VectorXd(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const ScalarBoxProx s =
        box_prox_scalar(x[i], spec.x_min, spec.x_max, mu, gamma, want_derivs);
    result.value[i] = s.value;
    if (want_derivs) {
      (*result.jac_diag)[i] = s.jac;
      (*result.grad_mu)[i] = s.grad_mu;
      (*result.grad_gamma)[i] = s.grad_gamma;
    }
  }
  return result;
}

ProxResult prox(const Eigen::VectorXd& x, const ConstraintSpec& spec,
                double mu, double gamma, bool want_derivs) {
  return std::visit(
      [&](const auto& s) -> ProxResult {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AffineHalfSpace>)
          return prox_affine(x, s, mu, gamma, want_derivs);
        else if constexpr (std::is_same_v<T, Hyperslab>)
          return prox_hyperslab(x, s, mu, gamma, want_derivs);
        else if constexpr (std::is_same_v<T, Ball>)
          return prox_ball(x, s, mu, gamma, want_derivs);
        else
          return prox_box(x, s, mu, gamma, want_derivs);
      },
      spec);
}

double barrier_value(const Eigen::VectorXd& x, const ConstraintSpec& spec) {
  const double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AffineHalfSpace>) {
          const double t = s.b - s.a.dot(x);
          return t > 0.0 ? -std::log(t) : inf;
        } else if constexpr (std::is_same_v<T, Hyperslab>) {
          const double sigma = s.a.dot(x);
          if (!(sigma > s.b_min && sigma < s.b_max)) return inf;
          return -std::log(s.b_max - sigma) - std::log(sigma - s.b_min);
        } else if constexpr (std::is_same_v<T, Ball>) {
          const double gap = s.alpha - (x - s.center).squaredNorm();
          return gap > 0.0 ? -std::log(gap) : inf;
        } else {
          double total = 0.0;
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double lo = x[i] - s.x_min;
            const double hi = s.x_max - x[i];
            if (!(lo > 0.0 && hi > 0.0)) return inf;
            total += -std::log(lo) - std::log(hi);
          }
          return total;
        }
      },
      spec);
}

}  // namespace proxipm
