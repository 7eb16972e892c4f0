#include "proxipm/stability.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "proxipm/rng.hpp"

namespace proxipm {

std::string to_string(CertCondition c) {
  switch (c) {
    case CertCondition::I:
      return "i";
    case CertCondition::II:
      return "ii";
    case CertCondition::III:
      return "iii";
    default:
      return "none";
  }
}

Eigen::ArrayXd layer_weight_spectrum(double gamma_k, double lambda_k,
                                     const Eigen::ArrayXd& eig_H,
                                     const Eigen::ArrayXd& eig_D) {
  if (eig_H.size() != eig_D.size())
    throw std::invalid_argument(
        "layer_weight_spectrum: spectra length mismatch");
  return 1.0 - gamma_k * (eig_H + lambda_k * eig_D);
}

ThetaResult theta_sequence(const std::vector<Eigen::ArrayXd>& spectra) {
  if (spectra.empty())
    throw std::invalid_argument("theta_sequence: no layer spectra");
  const Eigen::Index n = spectra.front().size();
  for (const auto& s : spectra)
    if (s.size() != n)
      throw std::invalid_argument("theta_sequence: spectra length mismatch");

  const int K = static_cast<int>(spectra.size());
  ThetaResult out;
  out.theta.resize(K);

  // theta_k = sum_{l<=k} theta_{l-1} * max_p |prod_{j=l..k} beta_j^(p)|,
  // with the running per-frequency products built from l = k downwards.
  Eigen::ArrayXd full_product;
  for (int k = 0; k < K; ++k) {
    Eigen::ArrayXd product = Eigen::ArrayXd::Ones(n);
    double acc = 0.0;
    for (int l = k; l >= 0; --l) {
      product *= spectra[l];
      const double norm = product.abs().maxCoeff();
      const double theta_prev = (l == 0) ? 1.0 : out.theta[l - 1];
      acc += theta_prev * norm;
      if (k == K - 1 && l == 0) full_product = product;
    }
    out.theta[k] = acc;
  }
  out.beta_minus = full_product.minCoeff();
  out.beta_plus = full_product.maxCoeff();
  return out;
}

std::optional<double> min_alpha_for_condition(CertCondition which,
                                              double beta_minus,
                                              double beta_plus,
                                              double theta_last, int K) {
  if (K < 1) throw std::invalid_argument("min_alpha_for_condition: K < 1");
  const double two_k = std::ldexp(1.0, K);        // 2^K
  const double two_km1 = std::ldexp(1.0, K - 1);  // 2^(K-1)
  const double s = beta_plus + beta_minus;

  double alpha = 0.0;
  switch (which) {
    case CertCondition::I:
      if (s > 0.0) return std::nullopt;
      alpha = 0.5 + theta_last / two_k;
      break;
    case CertCondition::II: {
      if (s < 0.0) return std::nullopt;
      alpha = std::max(0.5, 0.5 + (2.0 * theta_last - s) / (2.0 * two_k));
      // The case premise s <= 2^{K+1}(1 - alpha) must hold at the solution.
      if (s > 2.0 * two_k * (1.0 - alpha)) return std::nullopt;
      break;
    }
    case CertCondition::III:
      if (theta_last > two_km1) return std::nullopt;
      alpha = std::max(0.5, 1.0 - s / (2.0 * two_k));
      break;
    default:
      return std::nullopt;
  }
  if (!(alpha >= 0.5 && alpha <= 1.0)) return std::nullopt;
  return alpha;
}

bool conditions_satisfied_at(double alpha, double beta_minus, double beta_plus,
                             double theta_last, int K) {
  const double two_k = std::ldexp(1.0, K);
  const double two_km1 = std::ldexp(1.0, K - 1);
  const double s = beta_plus + beta_minus;
  if (alpha < 0.5 || alpha > 1.0) return false;
  if (s <= 0.0 && theta_last <= two_km1 * (2.0 * alpha - 1.0)) return true;
  if (0.0 <= s && s <= 2.0 * two_k * (1.0 - alpha) &&
      2.0 * theta_last <= s + two_k * (2.0 * alpha - 1.0))
    return true;
  if (2.0 * two_k * (1.0 - alpha) <= s && theta_last <= two_km1) return true;
  return false;
}

StabilityCertificate certify(
    const std::vector<std::pair<double, double>>& gamma_lambda,
    const Eigen::ArrayXd& eig_H, const Eigen::ArrayXd& eig_D) {
  if (gamma_lambda.empty())
    throw std::invalid_argument("certify: no layers");
  std::vector<Eigen::ArrayXd> spectra;
  spectra.reserve(gamma_lambda.size());
  for (const auto& [gamma, lambda] : gamma_lambda)
    spectra.push_back(layer_weight_spectrum(gamma, lambda, eig_H, eig_D));
  const ThetaResult tr = theta_sequence(spectra);

  StabilityCertificate cert;
  cert.K = static_cast<int>(gamma_lambda.size());
  cert.beta_minus = tr.beta_minus;
  cert.beta_plus = tr.beta_plus;
  cert.theta_last = tr.theta.back();

  const CertCondition order[] = {CertCondition::I, CertCondition::II,
                                 CertCondition::III};
  for (CertCondition cond : order) {
    const auto alpha = min_alpha_for_condition(
        cond, cert.beta_minus, cert.beta_plus, cert.theta_last, cert.K);
    if (!alpha) continue;
    if (!cert.alpha || *alpha < *cert.alpha) {
      cert.alpha = *alpha;
      cert.condition = cond;
    }
  }
  return cert;
}

StabilityCertificate certify_network(
    const UnfoldedNetwork& net, const DeblurProblem& quad_problem,
    std::vector<std::array<double, 3>>* frozen_params) {
  if (!quad_problem.is_quadratic())
    throw std::invalid_argument(
        "certify_network: unsupported problem, the certified case requires a "
        "quadratic regularizer over circulant operators");
  if (net.depth() < 1)
    throw std::invalid_argument("certify_network: network has no layers");

  const auto* quad = std::get_if<QuadraticReg>(&quad_problem.reg);
  Eigen::ArrayXd eig_D =
      Eigen::ArrayXd::Zero(quad_problem.H.eigenvalues_normal().size());
  for (const auto& op : quad->ops) eig_D += op.eigenvalues_normal();
  const Eigen::ArrayXd eig_H = quad_problem.H.eigenvalues_normal();

  // Freeze the data-dependent lambda_k at this input by running the layers.
  const double sigma_hat = net.sigma_hook.resolve(quad_problem.y);
  const double margin = net.x0_margin * (net.box.x_max - net.box.x_min);
  ImageTensor x = quad_problem.y;
  x.data = x.data.max(net.box.x_min + margin).min(net.box.x_max - margin);

  std::vector<std::pair<double, double>> gamma_lambda;
  std::vector<std::array<double, 3>> frozen;
  for (int k = 0; k < net.depth(); ++k) {
    const LayerParams& par = net.layers[k];
    const double gamma = softplus(par.a);
    const double mu = softplus(par.m);
    const LambdaStruct ls = lambda_struct(par, quad_problem, x, sigma_hat);
    gamma_lambda.emplace_back(gamma, ls.lambda);
    frozen.push_back({gamma, mu, ls.lambda});
    x = layer_step(quad_problem, x, gamma, mu, ls.lambda);
  }

  StabilityCertificate cert = certify(gamma_lambda, eig_H, eig_D);
  cert.kernel_hash = kernel_fingerprint(net.kernel);
  if (frozen_params) *frozen_params = std::move(frozen);
  return cert;
}

AveragednessCheck empirical_averagedness_check(
    const std::vector<std::array<double, 3>>& gamma_mu_lambda,
    const DeblurProblem& quad_problem, double alpha, int num_pairs,
    std::uint64_t seed) {
  if (!quad_problem.is_quadratic())
    throw std::invalid_argument(
        "empirical_averagedness_check: requires the quadratic problem");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument(
        "empirical_averagedness_check: alpha must be in (0,1]");

  auto apply_network = [&](const ImageTensor& x0) {
    ImageTensor x = x0;
    for (const auto& [gamma, mu, lambda] : gamma_mu_lambda)
      x = layer_step(quad_problem, x, gamma, mu, lambda);
    return x;
  };

  const ImageTensor& shape_ref = quad_problem.y;
  AveragednessCheck result;
  const double ratio = (1.0 - alpha) / alpha;
  for (int pair = 0; pair < num_pairs; ++pair) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(pair)));
    ImageTensor x = shape_ref.like();
    ImageTensor z = shape_ref.like();
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data[i] = rng.normal();
    for (Eigen::Index i = 0; i < z.data.size(); ++i) z.data[i] = rng.normal();

    const ImageTensor tx = apply_network(x);
    const ImageTensor tz = apply_network(z);

    const double lhs = (tx.data - tz.data).square().sum();
    const double dist = (x.data - z.data).square().sum();
    const double res =
        ((x.data - tx.data) - (z.data - tz.data)).square().sum();
    const double violation = lhs - (dist - ratio * res);
    const double slack = 1e-10 * std::max(1.0, dist);
    result.worst_violation = std::max(result.worst_violation, violation);
    if (violation > slack) result.pass = false;
  }
  return result;
}

std::string kernel_fingerprint(const Eigen::ArrayXXd& kernel) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&hash](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ULL;
    }
  };
  const std::int64_t rows = kernel.rows(), cols = kernel.cols();
  feed(&rows, sizeof rows);
  feed(&cols, sizeof cols);
  for (Eigen::Index i = 0; i < kernel.rows(); ++i)
    for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
      const double v = kernel(i, j);
      feed(&v, sizeof v);
    }
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string StabilityCertificate::to_json() const {
  nlohmann::json j;
  if (alpha)
    j["alpha"] = *alpha;
  else
    j["alpha"] = nullptr;
  j["condition"] = to_string(condition);
  j["beta_minus"] = beta_minus;
  j["beta_plus"] = beta_plus;
  j["theta_last"] = theta_last;
  j["K"] = K;
  j["kernel_hash"] = kernel_hash;
  return j.dump(2);
}

}  // namespace proxipm
