#include "proxipm/solver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "proxipm/imaging.hpp"
#include "proxipm/parallel.hpp"

namespace proxipm {

void IpmSchedule::validate() const {
  if (gamma0 < 0.0)
    throw std::invalid_argument("IpmSchedule: gamma0 must be positive (or 0 "
                                "for the automatic step)");
  if (!(mu0 > 0.0))
    throw std::invalid_argument("IpmSchedule: mu0 must be positive");
  if (!(mu_decay > 0.0 && mu_decay < 1.0))
    throw std::invalid_argument("IpmSchedule: mu_decay must be in (0,1)");
  if (iterations < 0)
    throw std::invalid_argument("IpmSchedule: negative iteration count");
  if (!(x0_margin > 0.0 && x0_margin < 0.5))
    throw std::invalid_argument("IpmSchedule: x0_margin must be in (0, 1/2)");
}

double IpmSchedule::resolve_gamma(const DeblurProblem& p,
                                  double lambda) const {
  if (gamma0 > 0.0) return gamma0;
  return 0.9 / gradient_lipschitz_bound(p, lambda);
}

ImageTensor initial_point(const DeblurProblem& p, double margin) {
  const double m = margin * (p.box.x_max - p.box.x_min);
  ImageTensor x0 = p.y;
  x0.data = x0.data.max(p.box.x_min + m).min(p.box.x_max - m);
  return x0;
}

FbIpmResult run_fb_ipm(const DeblurProblem& p, double lambda,
                       const IpmSchedule& sched) {
  sched.validate();
  if (!(lambda >= 0.0))
    throw std::invalid_argument("run_fb_ipm: lambda must be nonnegative");
  const double gamma = sched.resolve_gamma(p, lambda);
  if (!(gamma > 0.0))
    throw std::invalid_argument("run_fb_ipm: resolved gamma must be positive");

  FbIpmResult result;
  result.x = initial_point(p, sched.x0_margin);
  result.trace.reserve(sched.iterations);

  double mu = sched.mu0;
  for (int k = 0; k < sched.iterations; ++k) {
    const ImageTensor g = full_grad(p, result.x, lambda);
    Eigen::ArrayXd u = result.x.data - gamma * g.data;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      result.x.data[i] =
          box_prox_scalar(u[i], p.box.x_min, p.box.x_max, mu, gamma, false)
              .value;

    const double objective = objective_value(p, result.x, lambda);
    if (!std::isfinite(objective))
      throw std::runtime_error("run_fb_ipm: non-finite objective at iterate " +
                               std::to_string(k));
    const double margin =
        std::min((result.x.data - p.box.x_min).minCoeff(),
                 (p.box.x_max - result.x.data).minCoeff());
    result.trace.push_back({k, objective, margin});
    mu *= sched.mu_decay;
  }
  return result;
}

void write_trace_csv(const std::string& path,
                     const std::vector<SolveTraceRow>& trace) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out)
      throw std::runtime_error("write_trace_csv: cannot write '" + path + "'");
    out.precision(17);
    out << "iteration,objective,min_margin\n";
    for (const auto& row : trace)
      out << row.iteration << "," << row.objective << "," << row.min_margin
          << "\n";
  }
  std::filesystem::rename(tmp, path);
}

VarSearchResult var_grid_search(const DeblurProblem& p,
                                const ImageTensor& truth,
                                const std::vector<double>& lambda_grid,
                                const IpmSchedule& sched, int ssim_border) {
  if (lambda_grid.empty())
    throw std::invalid_argument("var_grid_search: empty lambda grid");
  require_same_shape(truth, p.y, "var_grid_search");

  struct Point {
    double ssim = std::numeric_limits<double>::quiet_NaN();
    ImageTensor image;
    bool ok = false;
  };
  std::vector<Point> points(lambda_grid.size());
  parallel_for(lambda_grid.size(), [&](std::size_t i) {
    try {
      FbIpmResult run = run_fb_ipm(p, lambda_grid[i], sched);
      points[i].ssim = ssim(run.x, truth, ssim_border);
      points[i].image = std::move(run.x);
      points[i].ok = true;
    } catch (const std::exception&) {
      points[i].ok = false;  // skipped; recorded as NaN in the scores
    }
  });

  VarSearchResult result;
  int best = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    result.scores.emplace_back(lambda_grid[i], points[i].ssim);
    if (!points[i].ok) continue;
    // Strictly-better keeps the first (smallest lambda) among ties when the
    // grid is sorted; unsorted grids still resolve ties toward smaller
    // lambda.
    if (best < 0 || points[i].ssim > points[best].ssim ||
        (points[i].ssim == points[best].ssim &&
         lambda_grid[i] < lambda_grid[best]))
      best = static_cast<int>(i);
  }
  if (best < 0)
    throw std::runtime_error(
        "var_grid_search: every grid point failed to solve");
  result.best_lambda = lambda_grid[best];
  result.best_ssim = points[best].ssim;
  result.best_image = std::move(points[best].image);
  return result;
}

}  // namespace proxipm
