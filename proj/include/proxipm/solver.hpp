#pragma once

#include <string>
#include <vector>

#include "proxipm/objective.hpp"

namespace proxipm {

/// Heuristic schedule for the reference solver: constant stepsize gamma0 and
/// geometric barrier decay mu_k = mu0 * mu_decay^k. gamma0 <= 0 selects the
/// automatic 0.9 / L(lambda) step, with L the gradient Lipschitz bound.
struct IpmSchedule {
  double gamma0 = 0.0;
  double mu0 = 1e-2;
  double mu_decay = 0.98;
  int iterations = 500;
  double x0_margin = 0.01;

  void validate() const;
  double resolve_gamma(const DeblurProblem& p, double lambda) const;
};

struct SolveTraceRow {
  int iteration = 0;
  double objective = 0.0;
  double min_margin = 0.0;  // min over pixels of distance to either bound
};

struct FbIpmResult {
  ImageTensor x;
  std::vector<SolveTraceRow> trace;
};

/// x0 = clamp(y, x_min + m, x_max - m), m = margin * (x_max - x_min).
ImageTensor initial_point(const DeblurProblem& p, double margin);

/// Forward-backward proximal interior-point iteration:
/// x_{k+1} = prox_{gamma_k mu_k B}(x_k - gamma_k grad h(x_k, y, lambda)).
/// Every iterate is strictly feasible; trace row k holds the objective after
/// update k.
FbIpmResult run_fb_ipm(const DeblurProblem& p, double lambda,
                       const IpmSchedule& sched);

void write_trace_csv(const std::string& path,
                     const std::vector<SolveTraceRow>& trace);

struct VarSearchResult {
  double best_lambda = 0.0;
  double best_ssim = 0.0;
  ImageTensor best_image;
  std::vector<std::pair<double, double>> scores;  // (lambda, ssim); failed
                                                  // grid points carry NaN
};

/// Oracle baseline: runs the solver per lambda, scores SSIM against the
/// ground truth and returns the argmax (ties toward smaller lambda). Failed
/// grid points are skipped; throws if every point fails.
VarSearchResult var_grid_search(const DeblurProblem& p,
                                const ImageTensor& truth,
                                const std::vector<double>& lambda_grid,
                                const IpmSchedule& sched,
                                int ssim_border = 0);

}  // namespace proxipm
