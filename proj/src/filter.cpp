#include "radloc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "radloc/errors.hpp"

namespace radloc {

FilterStreams FilterStreams::from_seed(std::uint64_t seed) {
  return FilterStreams{RandomStream(seed, streams::kInit),
                       RandomStream(seed, streams::kResample),
                       RandomStream(seed, streams::kKde)};
}

Particle sample_from_prior(const PriorSpec &prior, const Scene &scene,
                           RandomStream &rng) {
  const IntensityRange &ir = scene.intensity_range();
  if (const auto *box = std::get_if<UniformBoxPrior>(&prior)) {
    (void)box;
    return Particle{rng.uniform(scene.bounds().lo.x, scene.bounds().hi.x),
                    rng.uniform(scene.bounds().lo.y, scene.bounds().hi.y),
                    rng.uniform(ir.min_bq, ir.max_bq)};
  }
  if (const auto *hull = std::get_if<UniformHullPrior>(&prior)) {
    const Point2 p = sample_uniform_hull(hull->hull, rng);
    return Particle{p.x, p.y, rng.uniform(ir.min_bq, ir.max_bq)};
  }
  const auto &kde = std::get<KdePrior>(prior);
  return kde_sample(kde.model, 1, scene, rng).front();
}

Ensemble init_ensemble(const PriorSpec &prior, int n, const Scene &scene,
                       RandomStream &rng) {
  if (n < 2)
    throw std::invalid_argument("init_ensemble: need at least 2 particles");
  Ensemble ens;
  ens.particles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ens.particles.push_back(sample_from_prior(prior, scene, rng));
  const double w = 1.0 / static_cast<double>(n);
  ens.log_weights.assign(ens.particles.size(), std::log(w));
  ens.norm_weights.assign(ens.particles.size(), w);
  return ens;
}

void compute_log_weights(Ensemble &ens, const MeasurementFrame &frame,
                         std::span<const DetectorSpec> dets, const Scene &scene,
                         ForwardModel model, LikelihoodMode mode,
                         bool include_background) {
  if (frame.counts.size() != dets.size())
    throw std::invalid_argument(
        "compute_log_weights: frame length does not match detector count");
  ens.log_weights.resize(ens.size());
  std::vector<double> expected(dets.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const Particle &p = ens.particles[i];
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const double u = model == ForwardModel::QA
                           ? qa_response(p, dets[j])
                           : rt_response(p, dets[j], scene);
      expected[j] =
          u + (include_background ? dets[j].background_rate * dets[j].dwell
                                  : 0.0);
    }
    ens.log_weights[i] = log_likelihood(frame.counts, expected, mode);
  }
}

void normalize_weights(Ensemble &ens) {
  if (ens.size() == 0)
    throw std::invalid_argument("normalize_weights: empty ensemble");
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : ens.log_weights)
    if (std::isfinite(lw))
      max_lw = std::max(max_lw, lw);
  if (!std::isfinite(max_lw))
    throw DegenerateLikelihoodError(
        "normalize_weights: no particle has a finite log weight");

  ens.norm_weights.resize(ens.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double e = std::isfinite(ens.log_weights[i])
                         ? std::exp(ens.log_weights[i] - max_lw)
                         : 0.0;
    ens.norm_weights[i] = e;
    sum += e;
  }
  for (double &w : ens.norm_weights)
    w /= sum;
}

std::size_t retained_count(std::size_t n, double f) {
  return n - static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
}

std::vector<std::size_t> weight_order(const Ensemble &ens) {
  std::vector<std::size_t> order(ens.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&ens](std::size_t a, std::size_t b) {
                     return ens.norm_weights[a] > ens.norm_weights[b];
                   });
  return order;
}

void resample_sort_replace(Ensemble &ens, double f, const PriorSpec &importance,
                           const Scene &scene, RandomStream &rng) {
  if (!(f > 0.0) || !(f < 1.0))
    throw std::invalid_argument("resample fraction must lie in (0, 1)");
  const std::size_t n = ens.size();
  const std::size_t keep = retained_count(n, f);
  const std::vector<std::size_t> order = weight_order(ens);

  std::vector<Particle> next;
  next.reserve(n);
  for (std::size_t i = 0; i < keep; ++i)
    next.push_back(ens.particles[order[i]]);
  for (std::size_t i = keep; i < n; ++i)
    next.push_back(sample_from_prior(importance, scene, rng));

  ens.particles = std::move(next);
  const double w = 1.0 / static_cast<double>(n);
  ens.log_weights.assign(n, std::log(w));
  ens.norm_weights.assign(n, w);
}

KdeModel kde_fit(std::span<const Particle> particles, const Scene &scene) {
  if (particles.size() < 2)
    throw std::invalid_argument("kde_fit: need at least 2 particles");
  const double n = static_cast<double>(particles.size());

  double mx = 0.0, my = 0.0, ml = 0.0;
  for (const Particle &p : particles) {
    mx += p.x;
    my += p.y;
    ml += std::log(p.intensity);
  }
  mx /= n;
  my /= n;
  ml /= n;
  double vx = 0.0, vy = 0.0, vl = 0.0;
  for (const Particle &p : particles) {
    vx += (p.x - mx) * (p.x - mx);
    vy += (p.y - my) * (p.y - my);
    const double l = std::log(p.intensity);
    vl += (l - ml) * (l - ml);
  }
  vx /= n - 1.0;
  vy /= n - 1.0;
  vl /= n - 1.0;

  const double scott = std::pow(n, -1.0 / 7.0); // d = 3 dimensions
  const double log_range = std::log(scene.intensity_range().max_bq) -
                           std::log(scene.intensity_range().min_bq);
  KdeModel kde;
  kde.support.assign(particles.begin(), particles.end());
  kde.bandwidth_x = std::max(std::sqrt(vx) * scott, 0.1);
  kde.bandwidth_y = std::max(std::sqrt(vy) * scott, 0.1);
  kde.bandwidth_log_intensity = std::max(std::sqrt(vl) * scott, 0.01 * log_range);
  return kde;
}

std::vector<Particle> kde_sample(const KdeModel &kde, int n, const Scene &scene,
                                 RandomStream &rng) {
  if (n < 1)
    throw std::invalid_argument("kde_sample: n must be >= 1");
  if (kde.support.empty())
    throw std::invalid_argument("kde_sample: empty support");
  const IntensityRange &ir = scene.intensity_range();

  std::vector<Particle> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    long attempts = 0;
    for (;;) {
      const Particle &base =
          kde.support[rng.uniform_index(kde.support.size())];
      Particle cand;
      cand.x = base.x + kde.bandwidth_x * rng.normal();
      cand.y = base.y + kde.bandwidth_y * rng.normal();
      cand.intensity = std::exp(std::log(base.intensity) +
                                kde.bandwidth_log_intensity * rng.normal());
      if (scene.bounds().contains(cand.position()) &&
          cand.intensity >= ir.min_bq && cand.intensity <= ir.max_bq) {
        out.push_back(cand);
        break;
      }
      if (++attempts > 100000)
        throw std::runtime_error(
            "kde_sample: rejection rate above 99.9%; KDE mass lies outside "
            "the domain");
    }
  }
  return out;
}

PosteriorSummary posterior_summary(const Ensemble &ens) {
  if (ens.size() == 0)
    throw std::invalid_argument("posterior_summary: empty ensemble");

  PosteriorSummary s;
  double mx = 0.0, my = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double w = ens.norm_weights[i];
    mx += w * ens.particles[i].x;
    my += w * ens.particles[i].y;
    mi += w * ens.particles[i].intensity;
  }
  s.mean = Particle{mx, my, mi};

  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double w = ens.norm_weights[i];
    const double d[3] = {ens.particles[i].x - mx, ens.particles[i].y - my,
                         ens.particles[i].intensity - mi};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        s.covariance[r][c] += w * d[r] * d[c];
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < ens.size(); ++i)
    if (ens.norm_weights[i] > ens.norm_weights[best])
      best = i;
  s.map_particle = ens.particles[best];
  return s;
}

double weighted_integral(const Ensemble &ens,
                         const std::function<double(const Particle &)> &phi) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    num += ens.norm_weights[i] * phi(ens.particles[i]);
    den += ens.norm_weights[i];
  }
  return num / den;
}

double cluster_radius(const Ensemble &ens, double f) {
  const std::size_t n = ens.size();
  if (n < 2)
    throw std::invalid_argument("cluster_radius: need at least 2 particles");
  const std::size_t boundary_rank =
      static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
  if (boundary_rank < 1 || boundary_rank > n - 1)
    throw std::invalid_argument("cluster_radius: f*N must be in [1, N-1]");

  const std::vector<std::size_t> order = weight_order(ens);
  const std::size_t keep = n - boundary_rank;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    mx += ens.particles[order[i]].x;
    my += ens.particles[order[i]].y;
  }
  mx /= static_cast<double>(keep);
  my /= static_cast<double>(keep);

  // boundary particle: descending rank floor(f*N), 1-indexed; the weakest
  // member of the ball holding the top f fraction
  const Particle &pf = ens.particles[order[boundary_rank - 1]];
  return std::hypot(pf.x - mx, pf.y - my);
}

RunResult run_sir(const RunConfig &cfg, std::span<const MeasurementFrame> frames,
                  const RunOptions &opts, FilterStreams &streams) {
  if (frames.empty())
    throw std::invalid_argument("run_sir: need at least one frame");

  RunResult result;
  Ensemble ens =
      init_ensemble(cfg.prior, cfg.n_particles, cfg.scene, streams.init);
  PriorSpec importance = cfg.prior;
  bool importance_is_kde = false;

  for (std::size_t k = 1; k <= frames.size(); ++k) {
    compute_log_weights(ens, frames[k - 1], cfg.detectors, cfg.scene, cfg.model,
                        cfg.likelihood, cfg.include_background);
    try {
      normalize_weights(ens);
    } catch (const DegenerateLikelihoodError &e) {
      throw DegenerateLikelihoodError(std::string(e.what()) + " at step " +
                                      std::to_string(k));
    }

    result.r_series.push_back(cluster_radius(ens, cfg.resample_fraction));
    result.summary_series.push_back(posterior_summary(ens));
    if (opts.record_history)
      result.ensemble_history.push_back(ens);
    if (k == frames.size())
      result.final_weighted = ens;

    if (cfg.kde_importance && static_cast<int>(k) >= cfg.kde_fit_start &&
        (static_cast<int>(k) - cfg.kde_fit_start) % cfg.kde_refresh == 0) {
      // The KDE approximates the posterior cloud itself (the particle set
      // carried between steps), not just its top-weighted core; the fresh
      // draws inside it keep the importance distribution explorative while
      // the retained fraction pulls it toward the posterior over refits.
      importance = KdePrior{kde_fit(ens.particles, cfg.scene)};
      importance_is_kde = true;
    }

    RandomStream &draw_rng = importance_is_kde ? streams.kde : streams.resample;
    resample_sort_replace(ens, cfg.resample_fraction, importance, cfg.scene,
                          draw_rng);
  }

  result.final_ensemble = std::move(ens);
  return result;
}

} // namespace radloc
