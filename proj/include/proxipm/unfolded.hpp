#pragma once

#include <array>
#include <string>
#include <vector>

#include "proxipm/objective.hpp"

namespace proxipm {

/// ln(1 + exp(z)), overflow-safe.
double softplus(double z);
/// d softplus / dz, the logistic function.
double softplus_grad(double z);
/// Inverse of softplus on (0, inf).
double softplus_inverse(double s);

/// Four learnable scalars per layer, stored as pre-activations:
/// gamma_k = softplus(a), mu_k = softplus(m), and (b, c) feeding the
/// regularization-weight structure.
struct LayerParams {
  double a = 0.0;
  double m = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct SigmaPolicy {
  enum class Mode { EstimateFromInput, Fixed };
  Mode mode = Mode::EstimateFromInput;
  double value = 0.0;

  double resolve(const ImageTensor& y) const;
};

/// K unfolded solver iterations with per-layer learnable scalars, plus the
/// shared problem description (blur kernel, TV smoothing, box bounds).
struct UnfoldedNetwork {
  std::vector<LayerParams> layers;
  Eigen::ArrayXXd kernel;
  double delta = 0.01;
  Box box{0.0, 1.0};
  double x0_margin = 0.01;
  SigmaPolicy sigma_hook;

  /// Default-initialized network: layer 0 starts at gamma = 1, mu = 0.02 and
  /// unit lambda-structure scalars; deeper layers copy layer 0 until trained.
  static UnfoldedNetwork make(int K, Eigen::ArrayXXd kernel,
                              double delta = 0.01, Box box = {0.0, 1.0});

  int depth() const { return static_cast<int>(layers.size()); }

  /// Smoothed-TV problem bound to this network's kernel at y's shape.
  DeblurProblem problem_for(const ImageTensor& y) const;
};

/// Regularization weight lambda_k = softplus(b) sigma_hat / (eta + softplus(c))
/// where eta is the standard deviation of the stacked spatial gradients.
struct LambdaStruct {
  double lambda = 0.0;
  double d_b = 0.0;  // d lambda / d b
  double d_c = 0.0;  // d lambda / d c
  double eta = 0.0;
};
LambdaStruct lambda_struct(const LayerParams& params, const DeblurProblem& p,
                           const ImageTensor& x_k, double sigma_hat);

/// Everything the backward pass needs from one forward step.
struct LayerCache {
  ImageTensor x_k;
  ImageTensor x_next;
  double gamma = 0.0, mu = 0.0, lambda = 0.0;
  double sp_grad_a = 0.0, sp_grad_m = 0.0;
  double dlam_db = 0.0, dlam_dc = 0.0;
  ImageTensor grad_h;    // full objective gradient at x_k
  ImageTensor reg_grad;  // regularizer gradient at x_k
  Eigen::ArrayXd jac_diag, prox_grad_mu, prox_grad_gamma;
};

/// One unfolded update with explicit scalars; the building block shared by
/// the network and the stability analysis.
ImageTensor layer_step(const DeblurProblem& p, const ImageTensor& x_k,
                       double gamma, double mu, double lambda);

/// Forward pass of layer k: x_{k+1} = prox_{gamma mu B}(x_k - gamma grad h).
/// The cache, when requested, stores the prox derivative factors and the
/// pre-activation partials.
ImageTensor layer_forward(const UnfoldedNetwork& net, int k,
                          const DeblurProblem& p, const ImageTensor& x_k,
                          double sigma_hat, LayerCache* cache = nullptr);

struct LayerGrads {
  double a = 0.0, m = 0.0, b = 0.0, c = 0.0;
};

/// Reverse-mode gradients of <upstream, x_{k+1}> w.r.t. the four layer
/// scalars. When x_grad is non-null, also back-propagates to x_k, treating
/// eta(x_k) inside lambda_k as constant.
LayerGrads layer_vjp(const DeblurProblem& p, const LayerCache& cache,
                     const ImageTensor& upstream,
                     ImageTensor* x_grad = nullptr);

/// Full inference: clamp to the strict interior, then the K layer updates.
/// per_layer_params, when given, receives (gamma_k, mu_k, lambda_k) rows.
ImageTensor infer(const UnfoldedNetwork& net, const ImageTensor& y,
                  std::vector<std::array<double, 3>>* per_layer_params =
                      nullptr);

/// Versioned JSON model file; floats survive a save/load round trip exactly.
void save_model(const std::string& path, const UnfoldedNetwork& net);
UnfoldedNetwork load_model(const std::string& path);
std::string model_to_json(const UnfoldedNetwork& net);
UnfoldedNetwork model_from_json(const std::string& text);

}  // namespace proxipm
