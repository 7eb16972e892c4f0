#include "proxipm/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace proxipm {

DeblurProblem DeblurProblem::make_tv(CirculantOperator blur,
                                     ImageTensor observed, double delta,
                                     Box box) {
  if (!(delta > 0.0))
    throw std::invalid_argument("DeblurProblem: delta must be positive");
  const int h = observed.height, w = observed.width;
  if (blur.height() != h || blur.width() != w)
    throw std::invalid_argument("DeblurProblem: blur grid mismatch");
  return DeblurProblem{
      std::move(blur),
      std::move(observed),
      delta,
      box,
      CirculantOperator::gradient(GradientDirection::Vertical, h, w),
      CirculantOperator::gradient(GradientDirection::Horizontal, h, w),
      SmoothedTvReg{}};
}

DeblurProblem DeblurProblem::make_quadratic(
    CirculantOperator blur, ImageTensor observed,
    std::vector<CirculantOperator> reg_ops, Box box) {
  const int h = observed.height, w = observed.width;
  if (blur.height() != h || blur.width() != w)
    throw std::invalid_argument("DeblurProblem: blur grid mismatch");
  for (const auto& op : reg_ops)
    if (op.height() != h || op.width() != w)
      throw std::invalid_argument(
          "DeblurProblem: regularizer operator grid mismatch");
  return DeblurProblem{
      std::move(blur),
      std::move(observed),
      0.01,
      box,
      CirculantOperator::gradient(GradientDirection::Vertical, h, w),
      CirculantOperator::gradient(GradientDirection::Horizontal, h, w),
      QuadraticReg{std::move(reg_ops)}};
}

std::pair<double, ImageTensor> fidelity_value_grad(const DeblurProblem& p,
                                                   const ImageTensor& x) {
  require_same_shape(x, p.y, "fidelity_value_grad");
  ImageTensor residual = p.H.apply(x);
  residual.data -= p.y.data;
  const double value = 0.5 * residual.data.square().sum();
  return {value, p.H.apply_adjoint(residual)};
}

std::pair<double, ImageTensor> tv_value_grad(const DeblurProblem& p,
                                             const ImageTensor& x) {
  if (!(p.delta > 0.0))
    throw std::invalid_argument("tv_value_grad: delta must be positive");
  const double inv_d2 = 1.0 / (p.delta * p.delta);
  ImageTensor g = p.grad_v.apply(x);
  ImageTensor h = p.grad_h.apply(x);
  const Eigen::ArrayXd r =
      ((g.data.square() + h.data.square()) * inv_d2 + 1.0).sqrt();
  const double value = r.sum();
  g.data /= r;
  h.data /= r;
  ImageTensor grad = p.grad_v.apply_adjoint(g);
  grad.data += p.grad_h.apply_adjoint(h).data;
  grad.data *= inv_d2;
  return {value, grad};
}

ImageTensor tv_hessian_vec(const DeblurProblem& p, const ImageTensor& x,
                           const ImageTensor& v) {
  require_same_shape(x, v, "tv_hessian_vec");
  const double inv_d2 = 1.0 / (p.delta * p.delta);
  const ImageTensor g = p.grad_v.apply(x);
  const ImageTensor h = p.grad_h.apply(x);
  const Eigen::ArrayXd r =
      ((g.data.square() + h.data.square()) * inv_d2 + 1.0).sqrt();
  const Eigen::ArrayXd r3 = r * r * r;

  ImageTensor gv = p.grad_v.apply(v);
  ImageTensor hv = p.grad_h.apply(v);
  // Per-pixel 2x2 blocks of d(g/r, h/r)/d(g, h).
  const Eigen::ArrayXd dgg = 1.0 / r - inv_d2 * g.data.square() / r3;
  const Eigen::ArrayXd dhh = 1.0 / r - inv_d2 * h.data.square() / r3;
  const Eigen::ArrayXd dgh = -inv_d2 * g.data * h.data / r3;

  ImageTensor t1 = x.like();
  ImageTensor t2 = x.like();
  t1.data = dgg * gv.data + dgh * hv.data;
  t2.data = dgh * gv.data + dhh * hv.data;

  ImageTensor out = p.grad_v.apply_adjoint(t1);
  out.data += p.grad_h.apply_adjoint(t2).data;
  out.data *= inv_d2;
  return out;
}

std::pair<double, ImageTensor> reg_value_grad(const DeblurProblem& p,
                                              const ImageTensor& x) {
  if (const auto* quad = std::get_if<QuadraticReg>(&p.reg)) {
    double value = 0.0;
    ImageTensor grad = x.like();
    for (const auto& op : quad->ops) {
      ImageTensor dx = op.apply(x);
      value += 0.5 * dx.data.square().sum();
      grad.data += op.apply_adjoint(dx).data;
    }
    return {value, grad};
  }
  return tv_value_grad(p, x);
}

ImageTensor reg_hessian_vec(const DeblurProblem& p, const ImageTensor& x,
                            const ImageTensor& v) {
  if (const auto* quad = std::get_if<QuadraticReg>(&p.reg)) {
    ImageTensor out = v.like();
    for (const auto& op : quad->ops)
      out.data += op.apply_adjoint(op.apply(v)).data;
    return out;
  }
  return tv_hessian_vec(p, x, v);
}

ImageTensor full_grad(const DeblurProblem& p, const ImageTensor& x,
                      double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("full_grad: lambda must be nonnegative");
  auto [fid, grad] = fidelity_value_grad(p, x);
  (void)fid;
  if (lambda > 0.0) {
    auto [reg, reg_grad] = reg_value_grad(p, x);
    (void)reg;
    grad.data += lambda * reg_grad.data;
  }
  return grad;
}

double objective_value(const DeblurProblem& p, const ImageTensor& x,
                       double lambda) {
  ImageTensor residual = p.H.apply(x);
  residual.data -= p.y.data;
  double value = 0.5 * residual.data.square().sum();
  if (lambda > 0.0) value += lambda * reg_value_grad(p, x).first;
  return value;
}

double gradient_lipschitz_bound(const DeblurProblem& p, double lambda) {
  const double h2 = p.H.eigenvalues_normal().maxCoeff();
  double reg_curv = 0.0;
  if (const auto* quad = std::get_if<QuadraticReg>(&p.reg)) {
    for (const auto& op : quad->ops)
      reg_curv += op.eigenvalues_normal().maxCoeff();
  } else {
    // TV curvature per pixel is at most 1/delta^2 through each gradient pair.
    reg_curv = (p.grad_v.eigenvalues_normal().maxCoeff() +
                p.grad_h.eigenvalues_normal().maxCoeff()) /
               (p.delta * p.delta);
  }
  return h2 + lambda * reg_curv;
}

}  // namespace proxipm
