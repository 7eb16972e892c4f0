#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "proxipm/objective.hpp"
#include "proxipm/unfolded.hpp"

namespace proxipm {

enum class CertCondition { None, I, II, III };

std::string to_string(CertCondition c);

/// Certified averagedness of the unfolded quadratic-problem network, with
/// the spectral evidence that produced it.
struct StabilityCertificate {
  std::optional<double> alpha;  // in [1/2, 1] when a condition fired
  CertCondition condition = CertCondition::None;
  double beta_minus = 0.0;
  double beta_plus = 0.0;
  double theta_last = 0.0;
  int K = 0;
  std::string kernel_hash;

  std::string to_json() const;
};

/// Per-frequency eigenvalue of the layer weight operator
/// W_k = I - gamma_k (H^T H + lambda_k D^T D).
Eigen::ArrayXd layer_weight_spectrum(double gamma_k, double lambda_k,
                                     const Eigen::ArrayXd& eig_H,
                                     const Eigen::ArrayXd& eig_D);

struct ThetaResult {
  std::vector<double> theta;  // theta_0 .. theta_{K-1}
  double beta_minus = 0.0;    // min over p of the full product
  double beta_plus = 0.0;     // max over p of the full product
};

/// Recursion theta_k = sum_{l=0}^{k} theta_{l-1} max_p |prod_{j=l}^{k}
/// beta_j^(p)| with theta_{-1} = 1, over simultaneously diagonalized layers.
ThetaResult theta_sequence(const std::vector<Eigen::ArrayXd>& spectra);

/// Smallest alpha in [1/2, 1] satisfying the named certification condition
/// for the given evidence, or nullopt when the condition cannot hold.
std::optional<double> min_alpha_for_condition(CertCondition which,
                                              double beta_minus,
                                              double beta_plus,
                                              double theta_last, int K);

/// True when any certification condition holds at this alpha.
bool conditions_satisfied_at(double alpha, double beta_minus, double beta_plus,
                             double theta_last, int K);

/// Certifies the K-layer network with fixed per-layer (gamma_k, lambda_k)
/// against H and D spectra; picks the smallest alpha over the three
/// conditions (ties toward the earlier condition).
StabilityCertificate certify(
    const std::vector<std::pair<double, double>>& gamma_lambda,
    const Eigen::ArrayXd& eig_H, const Eigen::ArrayXd& eig_D);

/// Freezes (gamma_k, mu_k, lambda_k) of a trained network at a given input by
/// running the quadratic-problem forward pass, then certifies. The problem
/// must carry a quadratic regularizer.
StabilityCertificate certify_network(const UnfoldedNetwork& net,
                                     const DeblurProblem& quad_problem,
                                     std::vector<std::array<double, 3>>*
                                         frozen_params = nullptr);

struct AveragednessCheck {
  bool pass = true;
  double worst_violation = 0.0;  // positive = inequality violated
};

/// Monte-Carlo test of the averagedness inequality
/// ||T(x)-T(z)||^2 <= ||x-z||^2 - (1-alpha)/alpha ||(I-T)x-(I-T)z||^2
/// on seeded random pairs, where T is the K-layer quadratic-problem map with
/// the given frozen (gamma, mu, lambda) per layer.
AveragednessCheck empirical_averagedness_check(
    const std::vector<std::array<double, 3>>& gamma_mu_lambda,
    const DeblurProblem& quad_problem, double alpha, int num_pairs,
    std::uint64_t seed);

/// FNV-1a over the raw kernel bytes; identifies the operator a certificate
/// was issued for.
std::string kernel_fingerprint(const Eigen::ArrayXXd& kernel);

}  // namespace proxipm
