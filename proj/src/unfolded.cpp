#include "proxipm/unfolded.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "proxipm/imaging.hpp"

namespace proxipm {

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double softplus_grad(double z) {
  if (z > 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus_inverse(double s) {
  if (!(s > 0.0))
    throw std::invalid_argument("softplus_inverse: argument must be positive");
  // ln(exp(s) - 1), stable for large s.
  if (s > 30.0) return s;
  return std::log(std::expm1(s));
}

double SigmaPolicy::resolve(const ImageTensor& y) const {
  if (mode == Mode::Fixed) return value;
  return estimate_noise_std(y);
}

UnfoldedNetwork UnfoldedNetwork::make(int K, Eigen::ArrayXXd kernel,
                                      double delta, Box box) {
  if (K < 0) throw std::invalid_argument("UnfoldedNetwork: negative depth");
  UnfoldedNetwork net;
  net.kernel = std::move(kernel);
  net.delta = delta;
  net.box = box;
  const LayerParams init{softplus_inverse(1.0), softplus_inverse(0.02),
                         softplus_inverse(1.0), softplus_inverse(1.0)};
  net.layers.assign(K, init);
  return net;
}

DeblurProblem UnfoldedNetwork::problem_for(const ImageTensor& y) const {
  return DeblurProblem::make_tv(CirculantOperator(kernel, y.height, y.width),
                                y, delta, box);
}

LambdaStruct lambda_struct(const LayerParams& params, const DeblurProblem& p,
                           const ImageTensor& x_k, double sigma_hat) {
  if (!(sigma_hat >= 0.0))
    throw std::invalid_argument("lambda_struct: sigma_hat must be >= 0");
  const ImageTensor gv = p.grad_v.apply(x_k);
  const ImageTensor gh = p.grad_h.apply(x_k);
  const double n = static_cast<double>(gv.data.size() + gh.data.size());
  const double mean = (gv.data.sum() + gh.data.sum()) / n;
  const double var = ((gv.data - mean).square().sum() +
                      (gh.data - mean).square().sum()) /
                     n;
  const double eta = std::sqrt(std::max(var, 0.0));

  const double sp_b = softplus(params.b);
  const double sp_c = softplus(params.c);
  const double denom = eta + sp_c;

  LambdaStruct out;
  out.eta = eta;
  out.lambda = sp_b * sigma_hat / denom;
  out.d_b = softplus_grad(params.b) * sigma_hat / denom;
  out.d_c = -sp_b * sigma_hat * softplus_grad(params.c) / (denom * denom);
  return out;
}

ImageTensor layer_step(const DeblurProblem& p, const ImageTensor& x_k,
                       double gamma, double mu, double lambda) {
  const ImageTensor g = full_grad(p, x_k, lambda);
  ImageTensor out = x_k.like();
  for (Eigen::Index i = 0; i < out.data.size(); ++i)
    out.data[i] = box_prox_scalar(x_k.data[i] - gamma * g.data[i], p.box.x_min,
                                  p.box.x_max, mu, gamma, false)
                      .value;
  return out;
}

ImageTensor layer_forward(const UnfoldedNetwork& net, int k,
                          const DeblurProblem& p, const ImageTensor& x_k,
                          double sigma_hat, LayerCache* cache) {
  if (k < 0 || k >= net.depth())
    throw std::invalid_argument("layer_forward: layer index out of range");
  const LayerParams& par = net.layers[k];
  const double gamma = softplus(par.a);
  const double mu = softplus(par.m);
  const LambdaStruct ls = lambda_struct(par, p, x_k, sigma_hat);

  auto [reg_value, reg_grad] = reg_value_grad(p, x_k);
  (void)reg_value;
  auto [fid_value, grad_h] = fidelity_value_grad(p, x_k);
  (void)fid_value;
  grad_h.data += ls.lambda * reg_grad.data;

  ImageTensor x_next = x_k.like();
  const bool want_derivs = cache != nullptr;
  Eigen::ArrayXd jac_diag, gmu, gga;
  if (want_derivs) {
    jac_diag.resize(x_k.data.size());
    gmu.resize(x_k.data.size());
    gga.resize(x_k.data.size());
  }
  for (Eigen::Index i = 0; i < x_k.data.size(); ++i) {
    const double u = x_k.data[i] - gamma * grad_h.data[i];
    const ScalarBoxProx s =
        box_prox_scalar(u, p.box.x_min, p.box.x_max, mu, gamma, want_derivs);
    x_next.data[i] = s.value;
    if (want_derivs) {
      jac_diag[i] = s.jac;
      gmu[i] = s.grad_mu;
      gga[i] = s.grad_gamma;
    }
  }

  if (cache) {
    cache->x_k = x_k;
    cache->x_next = x_next;
    cache->gamma = gamma;
    cache->mu = mu;
    cache->lambda = ls.lambda;
    cache->sp_grad_a = softplus_grad(par.a);
    cache->sp_grad_m = softplus_grad(par.m);
    cache->dlam_db = ls.d_b;
    cache->dlam_dc = ls.d_c;
    cache->grad_h = std::move(grad_h);
    cache->reg_grad = std::move(reg_grad);
    cache->jac_diag = std::move(jac_diag);
    cache->prox_grad_mu = std::move(gmu);
    cache->prox_grad_gamma = std::move(gga);
  }
  return x_next;
}

LayerGrads layer_vjp(const DeblurProblem& p, const LayerCache& cache,
                     const ImageTensor& upstream, ImageTensor* x_grad) {
  if (cache.jac_diag.size() == 0)
    throw std::invalid_argument("layer_vjp: cache has no derivative factors");
  require_same_shape(upstream, cache.x_k, "layer_vjp");

  // w = J_phi^T upstream (diagonal Jacobian for the box barrier).
  const Eigen::ArrayXd w = cache.jac_diag * upstream.data;

  // d<up, x_next>/d gamma: prox gamma-gradient plus the input motion -grad_h.
  const double d_gamma = (upstream.data * cache.prox_grad_gamma).sum() -
                         (w * cache.grad_h.data).sum();
  const double d_mu = (upstream.data * cache.prox_grad_mu).sum();
  const double d_lambda = -cache.gamma * (w * cache.reg_grad.data).sum();

  LayerGrads grads;
  grads.a = d_gamma * cache.sp_grad_a;
  grads.m = d_mu * cache.sp_grad_m;
  grads.b = d_lambda * cache.dlam_db;
  grads.c = d_lambda * cache.dlam_dc;

  if (x_grad) {
    // (I - gamma Hess h)^T w with Hess h = H^T H + lambda * Hess R;
    // eta(x_k) inside lambda is held constant.
    ImageTensor wv = cache.x_k.like();
    wv.data = w;
    ImageTensor hv = p.H.apply_adjoint(p.H.apply(wv));
    hv.data += cache.lambda * reg_hessian_vec(p, cache.x_k, wv).data;
    *x_grad = cache.x_k.like();
    x_grad->data = w - cache.gamma * hv.data;
  }
  return grads;
}

ImageTensor infer(const UnfoldedNetwork& net, const ImageTensor& y,
                  std::vector<std::array<double, 3>>* per_layer_params) {
  const DeblurProblem p = net.problem_for(y);
  const double sigma_hat = net.sigma_hook.resolve(y);
  const double m = net.x0_margin * (net.box.x_max - net.box.x_min);
  ImageTensor x = y;
  x.data = x.data.max(net.box.x_min + m).min(net.box.x_max - m);
  if (per_layer_params) per_layer_params->clear();
  for (int k = 0; k < net.depth(); ++k) {
    if (per_layer_params) {
      const LayerParams& par = net.layers[k];
      const LambdaStruct ls = lambda_struct(par, p, x, sigma_hat);
      per_layer_params->push_back(
          {softplus(par.a), softplus(par.m), ls.lambda});
    }
    x = layer_forward(net, k, p, x, sigma_hat, nullptr);
  }
  return x;
}

namespace {
constexpr int kModelFormatVersion = 1;
}

std::string model_to_json(const UnfoldedNetwork& net) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["K"] = net.depth();
  j["delta"] = net.delta;
  j["box"] = {{"x_min", net.box.x_min}, {"x_max", net.box.x_max}};
  j["x0_margin"] = net.x0_margin;
  nlohmann::json kernel;
  kernel["rows"] = net.kernel.rows();
  kernel["cols"] = net.kernel.cols();
  std::vector<double> data;
  data.reserve(net.kernel.size());
  for (Eigen::Index i = 0; i < net.kernel.rows(); ++i)
    for (Eigen::Index jx = 0; jx < net.kernel.cols(); ++jx)
      data.push_back(net.kernel(i, jx));
  kernel["data"] = data;
  j["kernel"] = kernel;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& lp : net.layers)
    layers.push_back({lp.a, lp.m, lp.b, lp.c});
  j["layers"] = layers;
  return j.dump(2);
}

UnfoldedNetwork model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != kModelFormatVersion)
    throw std::runtime_error("model: unsupported or missing format_version");
  UnfoldedNetwork net;
  net.delta = j.at("delta").get<double>();
  net.box.x_min = j.at("box").at("x_min").get<double>();
  net.box.x_max = j.at("box").at("x_max").get<double>();
  if (j.contains("x0_margin")) net.x0_margin = j["x0_margin"].get<double>();
  const auto& kernel = j.at("kernel");
  const Eigen::Index rows = kernel.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = kernel.at("cols").get<Eigen::Index>();
  const auto data = kernel.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("model: kernel data size mismatch");
  net.kernel.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jx = 0; jx < cols; ++jx)
      net.kernel(i, jx) = data[static_cast<std::size_t>(i) * cols + jx];
  const int K = j.at("K").get<int>();
  const auto& layers = j.at("layers");
  if (static_cast<int>(layers.size()) != K)
    throw std::runtime_error("model: K does not match the layer list");
  net.layers.clear();
  for (const auto& lp : layers) {
    if (!lp.is_array() || lp.size() != 4)
      throw std::runtime_error("model: each layer must be [a, m, b, c]");
    net.layers.push_back(LayerParams{lp[0].get<double>(), lp[1].get<double>(),
                                     lp[2].get<double>(),
                                     lp[3].get<double>()});
  }
  return net;
}

void save_model(const std::string& path, const UnfoldedNetwork& net) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out)
      throw std::runtime_error("save_model: cannot write '" + path + "'");
    out << model_to_json(net) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

UnfoldedNetwork load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_model: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace proxipm
