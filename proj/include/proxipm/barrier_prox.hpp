#pragma once

#include <optional>
#include <variant>

#include <Eigen/Core>

namespace proxipm {

/// a^T x <= b with a != 0.
struct AffineHalfSpace {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// b_min <= a^T x <= b_max with a != 0 and b_min < b_max.
struct Hyperslab {
  Eigen::VectorXd a;
  double b_min = 0.0;
  double b_max = 1.0;
};

/// ||x - center||^2 <= alpha with alpha > 0.
struct Ball {
  Eigen::VectorXd center;
  double alpha = 1.0;
};

/// x_min <= x_i <= x_max per coordinate.
struct Box {
  double x_min = 0.0;
  double x_max = 1.0;
};

using ConstraintSpec = std::variant<AffineHalfSpace, Hyperslab, Ball, Box>;

/// Jacobian of the prox w.r.t. x as scale*I + u v^T.
struct RankOneJacobian {
  double scale = 1.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

struct ProxResult {
  Eigen::VectorXd value;
  /// Cubic root parameterizing the hyperslab/ball prox (a^T phi resp.
  /// ||phi - c||); zero for the affine case.
  double kappa = 0.0;
  std::optional<RankOneJacobian> jac_rank1;
  std::optional<Eigen::ArrayXd> jac_diag;  // box: diagonal Jacobian
  std::optional<Eigen::VectorXd> grad_mu;
  std::optional<Eigen::VectorXd> grad_gamma;

  bool has_derivs() const {
    return grad_mu.has_value() && grad_gamma.has_value();
  }

  /// J_x * w (all stored Jacobians are symmetric).
  Eigen::VectorXd apply_jac(const Eigen::VectorXd& w) const;
};

/// Root of c3 z^3 + c2 z^2 + c1 z + c0 in (lo, hi) (lo itself admitted, for
/// the ball prox at the center). The cubic must have exactly one root there.
/// Roots come from the trigonometric/Cardano formulas, polished by one
/// guarded Newton step; a safeguarded bisection runs when the discriminant or
/// root separation is within 1e-12 of zero.
double cubic_root_in_interval(double c3, double c2, double c1, double c0,
                              double lo, double hi);

ProxResult prox_affine(const Eigen::VectorXd& x, const AffineHalfSpace& spec,
                       double mu, double gamma, bool want_derivs);
ProxResult prox_hyperslab(const Eigen::VectorXd& x, const Hyperslab& spec,
                          double mu, double gamma, bool want_derivs);
ProxResult prox_ball(const Eigen::VectorXd& x, const Ball& spec, double mu,
                     double gamma, bool want_derivs);
ProxResult prox_box(const Eigen::VectorXd& x, const Box& spec, double mu,
                    double gamma, bool want_derivs);

ProxResult prox(const Eigen::VectorXd& x, const ConstraintSpec& spec,
                double mu, double gamma, bool want_derivs);

/// -sum_i ln(c_i(x)); +inf outside the strict interior.
double barrier_value(const Eigen::VectorXd& x, const ConstraintSpec& spec);

/// Scalar box-barrier prox with optional derivative factors; the workhorse
/// behind prox_box and the unfolded layers.
struct ScalarBoxProx {
  double value = 0.0;
  double jac = 0.0;       // d value / d x
  double grad_mu = 0.0;   // d value / d mu
  double grad_gamma = 0.0;
};
ScalarBoxProx box_prox_scalar(double x, double b_min, double b_max, double mu,
                              double gamma, bool want_derivs);

}  // namespace proxipm
