#include "radloc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace radloc {

double localization_error(const PosteriorSummary &summary,
                          const Particle &truth) {
  return std::hypot(summary.mean.x - truth.x, summary.mean.y - truth.y);
}

namespace {

double estimate_phi(const RunConfig &base, int n_particles,
                    std::span<const MeasurementFrame> frames,
                    const std::function<double(const Particle &)> &phi,
                    FilterStreams &streams) {
  RunConfig cfg = base;
  cfg.n_particles = n_particles;
  const RunResult result = run_sir(cfg, frames, RunOptions{false}, streams);
  return weighted_integral(result.final_weighted, phi);
}

} // namespace

ConvergenceReport
mse_slope_experiment(const RunConfig &cfg, const Particle &source, int n_frames,
                     const std::function<double(const Particle &)> &phi,
                     std::span<const int> n_values, int reference_n, int seeds,
                     const RandomStream &root) {
  if (n_values.empty())
    throw std::invalid_argument("mse_slope_experiment: no particle counts");
  if (seeds < 1)
    throw std::invalid_argument("mse_slope_experiment: seeds must be >= 1");
  if (n_frames < 1)
    throw std::invalid_argument("mse_slope_experiment: n_frames must be >= 1");
  int max_n = 0;
  for (int n : n_values)
    max_n = std::max(max_n, n);
  if (reference_n < 2 * max_n)
    throw std::invalid_argument(
        "mse_slope_experiment: reference_n must be well above max(n_values)");

  const std::function<double(const Particle &)> checked_phi =
      [&phi](const Particle &p) {
        const double v = phi(p);
        if (!std::isfinite(v))
          throw std::invalid_argument(
              "mse_slope_experiment: test function returned a non-finite value");
        return v;
      };

  const auto filter_streams = [&root](int seed, int n) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(seed) << 32) ^
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) * 8ULL);
    return FilterStreams{root.substream(key + 1), root.substream(key + 2),
                         root.substream(key + 3)};
  };

  ConvergenceReport report;
  report.n_values.assign(n_values.begin(), n_values.end());
  report.mse_values.assign(n_values.size(), 0.0);

  for (int s = 0; s < seeds; ++s) {
    RandomStream meas_rng =
        root.substream((static_cast<std::uint64_t>(s) << 32) | 0x5u);
    std::vector<MeasurementFrame> frames;
    frames.reserve(static_cast<std::size_t>(n_frames));
    for (int k = 1; k <= n_frames; ++k)
      frames.push_back(simulate_observation(source, cfg.detectors, cfg.scene,
                                            cfg.model, meas_rng, k));

    FilterStreams ref_streams = filter_streams(s, reference_n);
    const double est_ref =
        estimate_phi(cfg, reference_n, frames, checked_phi, ref_streams);

    for (std::size_t i = 0; i < report.n_values.size(); ++i) {
      FilterStreams n_streams = filter_streams(s, report.n_values[i]);
      const double est = estimate_phi(cfg, report.n_values[i], frames,
                                      checked_phi, n_streams);
      const double diff = est - est_ref;
      report.mse_values[i] += diff * diff;
    }
  }
  for (double &m : report.mse_values)
    m /= static_cast<double>(seeds);

  // least-squares slope of ln(MSE) against ln(N); left at zero when any MSE
  // vanishes (phi constant)
  bool all_positive = true;
  for (double m : report.mse_values)
    all_positive = all_positive && m > 0.0;
  if (all_positive && report.n_values.size() >= 2) {
    double sx = 0.0, sy = 0.0;
    const double n = static_cast<double>(report.n_values.size());
    std::vector<double> xs(report.n_values.size()), ys(report.n_values.size());
    for (std::size_t i = 0; i < report.n_values.size(); ++i) {
      xs[i] = std::log(static_cast<double>(report.n_values[i]));
      ys[i] = std::log(report.mse_values[i]);
      sx += xs[i];
      sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      num += (xs[i] - mx) * (ys[i] - my);
      den += (xs[i] - mx) * (xs[i] - mx);
    }
    report.loglog_slope = num / den;
  }
  return report;
}

double radius_monotonicity_stat(std::span<const double> r_series,
                                double tail_fraction) {
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw std::invalid_argument("tail_fraction must lie in (0, 1]");
  const std::size_t n = r_series.size();
  const std::size_t count = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(n)));
  if (count < 2)
    throw std::invalid_argument(
        "radius_monotonicity_stat: tail holds fewer than 2 entries");
  const std::size_t start = n - count;
  std::size_t good = 0;
  for (std::size_t i = start; i + 1 < n; ++i)
    if (r_series[i + 1] <= r_series[i])
      ++good;
  return static_cast<double>(good) / static_cast<double>(count - 1);
}

} // namespace radloc
