#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "proxipm/barrier_prox.hpp"
#include "proxipm/image.hpp"
#include "proxipm/linops.hpp"

namespace proxipm {

/// Smoothed total variation sum_i sqrt(((D_v x)_i^2 + (D_h x)_i^2)/delta^2 + 1).
struct SmoothedTvReg {};

/// Quadratic regularizer (1/2) sum_j ||D_j x||^2 over circulant operators.
struct QuadraticReg {
  std::vector<CirculantOperator> ops;
};

using RegKind = std::variant<SmoothedTvReg, QuadraticReg>;

/// Restoration objective: (1/2)||Hx - y||^2 + lambda * R(x) over a box.
struct DeblurProblem {
  CirculantOperator H;
  ImageTensor y;
  double delta = 0.01;
  Box box{0.0, 1.0};
  CirculantOperator grad_v;
  CirculantOperator grad_h;
  RegKind reg;

  /// Smoothed-TV problem with gradient operators built for y's shape.
  static DeblurProblem make_tv(CirculantOperator blur, ImageTensor observed,
                               double delta = 0.01, Box box = {0.0, 1.0});

  /// Quadratic-regularizer problem (the stability-analysis case).
  static DeblurProblem make_quadratic(CirculantOperator blur,
                                      ImageTensor observed,
                                      std::vector<CirculantOperator> reg_ops,
                                      Box box = {0.0, 1.0});

  bool is_quadratic() const {
    return std::holds_alternative<QuadraticReg>(reg);
  }
};

/// (1/2)||Hx - y||^2 and its gradient H^T(Hx - y).
std::pair<double, ImageTensor> fidelity_value_grad(const DeblurProblem& p,
                                                   const ImageTensor& x);

/// Smoothed TV value and gradient (1/delta^2)[D_v^T(g/r) + D_h^T(h/r)].
std::pair<double, ImageTensor> tv_value_grad(const DeblurProblem& p,
                                             const ImageTensor& x);

/// Hessian-vector product of the smoothed TV at x.
ImageTensor tv_hessian_vec(const DeblurProblem& p, const ImageTensor& x,
                           const ImageTensor& v);

/// Regularizer value and gradient, dispatching on the problem's reg kind.
std::pair<double, ImageTensor> reg_value_grad(const DeblurProblem& p,
                                              const ImageTensor& x);

/// Regularizer Hessian-vector product.
ImageTensor reg_hessian_vec(const DeblurProblem& p, const ImageTensor& x,
                            const ImageTensor& v);

/// H^T(Hx - y) + lambda * grad R(x).
ImageTensor full_grad(const DeblurProblem& p, const ImageTensor& x,
                      double lambda);

/// Objective value (1/2)||Hx - y||^2 + lambda R(x).
double objective_value(const DeblurProblem& p, const ImageTensor& x,
                       double lambda);

/// Upper bound on the Lipschitz constant of the objective gradient:
/// ||H||^2 + lambda * (curvature bound of R).
double gradient_lipschitz_bound(const DeblurProblem& p, double lambda);

}  // namespace proxipm
