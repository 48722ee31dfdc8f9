#include "radloc/mobility.hpp"

#include <cmath>
#include <stdexcept>

#include "radloc/errors.hpp"

namespace radloc {

void validate(const MoveConfig &cfg) {
  if (!(cfg.step_length > 0.0) || !std::isfinite(cfg.step_length))
    throw std::invalid_argument("mobility step_length must be positive");
  if (cfg.cadence < 1)
    throw std::invalid_argument("mobility cadence must be >= 1");
  if (cfg.max_random_tries < 1)
    throw std::invalid_argument("mobility max_random_tries must be >= 1");
}

namespace {

bool clear_path(const Point2 &from, const Point2 &to, const Scene &scene) {
  return !segment_blocked(from, to, scene);
}

} // namespace

DetectorSpec move_detector(const DetectorSpec &det, const Point2 &target,
                           const Scene &scene, const MoveConfig &cfg,
                           RandomStream &rng) {
  const Point2 pos = det.position;
  const double dist = distance(pos, target);
  DetectorSpec moved = det;
  if (dist < kGeomTol)
    return moved; // already at the target

  // direct pursuit; land exactly on the target when it is within one step
  Point2 cand;
  if (dist <= cfg.step_length) {
    cand = target;
  } else {
    const double s = cfg.step_length / dist;
    cand = Point2{pos.x + s * (target.x - pos.x), pos.y + s * (target.y - pos.y)};
  }
  if (clear_path(pos, cand, scene)) {
    moved.position = cand;
    return moved;
  }

  // axis fallback: try the coordinate direction that most reduces the
  // distance to the target, then the other one
  const double sx = target.x >= pos.x ? 1.0 : -1.0;
  const double sy = target.y >= pos.y ? 1.0 : -1.0;
  Point2 cand_x{pos.x + sx * cfg.step_length, pos.y};
  Point2 cand_y{pos.x, pos.y + sy * cfg.step_length};
  if (distance(cand_y, target) < distance(cand_x, target))
    std::swap(cand_x, cand_y);
  for (const Point2 &c : {cand_x, cand_y}) {
    if (clear_path(pos, c, scene)) {
      moved.position = c;
      return moved;
    }
  }

  for (int t = 0; t < cfg.max_random_tries; ++t) {
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const Point2 c{pos.x + cfg.step_length * std::cos(theta),
                   pos.y + cfg.step_length * std::sin(theta)};
    if (clear_path(pos, c, scene)) {
      moved.position = c;
      return moved;
    }
  }
  return moved; // boxed in; stay put
}

MobileRunResult run_sir_mobile(const RunConfig &cfg, const Particle &source,
                               int n_frames, const MoveConfig &move_cfg,
                               const RunOptions &opts, FilterStreams &streams,
                               RandomStream &measurement_rng,
                               RandomStream &mobility_rng) {
  if (n_frames < 1)
    throw std::invalid_argument("run_sir_mobile: need at least one frame");
  validate(move_cfg);

  std::vector<DetectorSpec> dets = cfg.detectors;
  MobileRunResult result;
  auto snapshot = [&dets]() {
    std::vector<Point2> ps;
    ps.reserve(dets.size());
    for (const DetectorSpec &d : dets)
      ps.push_back(d.position);
    return ps;
  };
  result.detector_history.push_back(snapshot());

  Ensemble ens =
      init_ensemble(cfg.prior, cfg.n_particles, cfg.scene, streams.init);
  PriorSpec importance = cfg.prior;
  bool importance_is_kde = false;

  for (int k = 1; k <= n_frames; ++k) {
    MeasurementFrame frame = simulate_observation(
        source, dets, cfg.scene, cfg.model, measurement_rng, k);

    compute_log_weights(ens, frame, dets, cfg.scene, cfg.model, cfg.likelihood,
                        cfg.include_background);
    try {
      normalize_weights(ens);
    } catch (const DegenerateLikelihoodError &e) {
      throw DegenerateLikelihoodError(std::string(e.what()) + " at step " +
                                      std::to_string(k));
    }

    result.run.r_series.push_back(cluster_radius(ens, cfg.resample_fraction));
    const PosteriorSummary summary = posterior_summary(ens);
    result.run.summary_series.push_back(summary);
    if (opts.record_history)
      result.run.ensemble_history.push_back(ens);
    if (k == n_frames)
      result.run.final_weighted = ens;
    result.frames.push_back(std::move(frame));

    if (k % move_cfg.cadence == 0) {
      const Point2 target{summary.mean.x, summary.mean.y};
      for (DetectorSpec &det : dets)
        det = move_detector(det, target, cfg.scene, move_cfg, mobility_rng);
    }
    result.detector_history.push_back(snapshot());

    if (cfg.kde_importance && k >= cfg.kde_fit_start &&
        (k - cfg.kde_fit_start) % cfg.kde_refresh == 0) {
      // KDE over the whole carried cloud; see run_sir
      importance = KdePrior{kde_fit(ens.particles, cfg.scene)};
      importance_is_kde = true;
    }

    RandomStream &draw_rng = importance_is_kde ? streams.kde : streams.resample;
    resample_sort_replace(ens, cfg.resample_fraction, importance, cfg.scene,
                          draw_rng);
  }

  result.run.final_ensemble = std::move(ens);
  return result;
}

} // namespace radloc
