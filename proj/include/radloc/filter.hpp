#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "radloc/detector_model.hpp"
#include "radloc/measurement.hpp"

namespace radloc {

/// N particles with log weights and normalized weights kept side by side.
struct Ensemble {
  std::vector<Particle> particles;
  std::vector<double> log_weights;
  std::vector<double> norm_weights;

  std::size_t size() const { return particles.size(); }
};

/// Gaussian product-kernel density estimate. The intensity dimension is
/// handled in log space: bandwidth_log_intensity applies to ln(I), which
/// keeps kernel mass away from nonpositive intensities.
struct KdeModel {
  std::vector<Particle> support;
  double bandwidth_x = 0.0;             // meters
  double bandwidth_y = 0.0;             // meters
  double bandwidth_log_intensity = 0.0; // ln(Bq)
};

struct UniformBoxPrior {};
struct UniformHullPrior {
  ConvexHull hull;
};
struct KdePrior {
  KdeModel model;
};

/// Sampling distribution for initialization and for resampling replacements.
using PriorSpec = std::variant<UniformBoxPrior, UniformHullPrior, KdePrior>;

/// One particle drawn from the prior; positions restricted to the scene
/// bounds (box), the hull, or the KDE with domain rejection. Intensity is
/// uniform over the scene's intensity range for the uniform priors.
Particle sample_from_prior(const PriorSpec &prior, const Scene &scene,
                           RandomStream &rng);

/// n i.i.d. prior particles, all weights 1/n. Throws for n < 2.
Ensemble init_ensemble(const PriorSpec &prior, int n, const Scene &scene,
                       RandomStream &rng);

/// Per-particle log weight = log likelihood of the frame under the forward
/// model; background means B_j * dwell_j enter the expectation only when
/// include_background is set.
void compute_log_weights(Ensemble &ens, const MeasurementFrame &frame,
                         std::span<const DetectorSpec> dets, const Scene &scene,
                         ForwardModel model, LikelihoodMode mode,
                         bool include_background);

/// Softmax of the log weights with max subtraction. Throws
/// DegenerateLikelihoodError when no weight is finite.
void normalize_weights(Ensemble &ens);

/// Number of particles kept by sort-and-replace resampling at fraction f.
std::size_t retained_count(std::size_t n, double f);

/// Particle indices ordered by descending normalized weight; ties keep the
/// lower original index first.
std::vector<std::size_t> weight_order(const Ensemble &ens);

/// Sort-and-replace resampling: the floor(f*N) lowest-weighted particles are
/// replaced with fresh draws from the importance distribution, the rest are
/// kept unchanged (stored first, in descending weight order), and all weights
/// reset to 1/N.
void resample_sort_replace(Ensemble &ens, double f, const PriorSpec &importance,
                           const Scene &scene, RandomStream &rng);

/// Gaussian KDE with per-dimension Scott's-rule bandwidths
/// (sigma * n^(-1/7); three dimensions) and floors of 0.1 m positionally and
/// 1% of the log-intensity range.
KdeModel kde_fit(std::span<const Particle> particles, const Scene &scene);

/// Draws from the KDE mixture, rejecting samples outside the scene bounds or
/// intensity range. Throws when the rejection rate is persistently above
/// 99.9% (KDE mass outside the domain).
std::vector<Particle> kde_sample(const KdeModel &kde, int n, const Scene &scene,
                                 RandomStream &rng);

struct PosteriorSummary {
  Particle mean;
  std::array<std::array<double, 3>, 3> covariance{}; // over (x, y, intensity)
  Particle map_particle;
};

/// Weighted mean/covariance of the ensemble plus the maximum-weight particle
/// (ties resolved to the lowest index).
PosteriorSummary posterior_summary(const Ensemble &ens);

/// Weighted mean of phi over the ensemble, explicitly renormalized so that
/// phi == 1 integrates to exactly 1.0.
double weighted_integral(const Ensemble &ens,
                         const std::function<double(const Particle &)> &phi);

/// Radius of the top-weighted cluster: distance from the floor(f*N)-th
/// particle in descending weight order to the positional mean of the top
/// (1-f)*N particles.
double cluster_radius(const Ensemble &ens, double f);

/// Everything run_sir needs; data-io's Scenario converts into this.
struct RunConfig {
  Scene scene;
  std::vector<DetectorSpec> detectors;
  ForwardModel model = ForwardModel::QA;
  LikelihoodMode likelihood = LikelihoodMode::poisson();
  PriorSpec prior;
  int n_particles = 0;
  double resample_fraction = 0.6;
  bool include_background = true;
  // KDE importance schedule: after kde_fit_start frames the replacement draws
  // come from a KDE refit on the retained particles every kde_refresh frames.
  bool kde_importance = false;
  int kde_fit_start = 10;
  int kde_refresh = 3;
};

struct RunOptions {
  bool record_history = true;
};

struct FilterStreams {
  RandomStream init;
  RandomStream resample;
  RandomStream kde;

  /// Conventional wiring from one root seed.
  static FilterStreams from_seed(std::uint64_t seed);
};

struct RunResult {
  // Weighted (pre-resampling) ensembles per step; the posterior estimate the
  // filter actually reports. Empty when record_history is off.
  std::vector<Ensemble> ensemble_history;
  std::vector<double> r_series;
  std::vector<PosteriorSummary> summary_series;
  // Weighted ensemble at the last step, kept even without history.
  Ensemble final_weighted;
  // Post-resampling state after the last step; retained particles first.
  Ensemble final_ensemble;
};

/// Runs the SIR loop over the given frames: weight, normalize, record the
/// weighted summary and cluster radius, then sort-and-replace resample. The
/// state transition is the identity, so particles only move via resampling.
RunResult run_sir(const RunConfig &cfg, std::span<const MeasurementFrame> frames,
                  const RunOptions &opts, FilterStreams &streams);

} // namespace radloc
