#pragma once

#include <functional>
#include <span>
#include <vector>

#include "radloc/filter.hpp"

namespace radloc {

/// Aggregated convergence evidence: particle-count scaling of the Monte Carlo
/// error plus cluster-radius shrinkage statistics.
struct ConvergenceReport {
  std::vector<int> n_values;
  std::vector<double> mse_values;
  double loglog_slope = 0.0;
  double radius_monotone_fraction = 0.0;
  double final_error_m = 0.0;
};

/// Planar distance between the posterior mean and the true source.
double localization_error(const PosteriorSummary &summary,
                          const Particle &truth);

/// Self-convergence study: for each N, runs the filter against the same
/// simulated frames at N and at reference_n particles and accumulates the
/// squared difference of the weighted phi-integrals at the final step over
/// the seed suite. Fills n_values, mse_values and loglog_slope. The
/// reference run stands in for the unreachable exact posterior, so
/// reference_n must be well above every tested N.
ConvergenceReport
mse_slope_experiment(const RunConfig &cfg, const Particle &source, int n_frames,
                     const std::function<double(const Particle &)> &phi,
                     std::span<const int> n_values, int reference_n, int seeds,
                     const RandomStream &root);

/// Fraction of consecutive pairs with r[k+1] <= r[k] over the trailing
/// tail_fraction of the series.
double radius_monotonicity_stat(std::span<const double> r_series,
                                double tail_fraction);

} // namespace radloc
