#pragma once

#include <vector>

#include "radloc/filter.hpp"

namespace radloc {

struct MoveConfig {
  double step_length = 1.0; // meters per move
  int cadence = 1;          // frames between moves
  int max_random_tries = 64;
};

/// Throws std::invalid_argument when a field violates its range.
void validate(const MoveConfig &cfg);

/// One pursuit step toward the target. The direct move is taken when its path
/// is clear of buildings; otherwise the axis direction that most reduces the
/// distance to the target is tried, then the other axis, then uniformly
/// random directions. When every candidate is blocked the detector stays put.
/// A detector closer than one step moves exactly onto the target.
DetectorSpec move_detector(const DetectorSpec &det, const Point2 &target,
                           const Scene &scene, const MoveConfig &cfg,
                           RandomStream &rng);

struct MobileRunResult {
  RunResult run;
  // Simulated frames, one per step, taken at that step's detector positions.
  std::vector<MeasurementFrame> frames;
  // detector_history[k][j]: position of detector j after step k's move phase;
  // entry 0 holds the initial layout.
  std::vector<std::vector<Point2>> detector_history;
};

/// SIR loop with moveable detectors: each step simulates a frame at the
/// current detector positions, weights and summarizes the ensemble, then
/// (every cadence frames) steps every detector toward the weighted positional
/// mean before resampling.
MobileRunResult run_sir_mobile(const RunConfig &cfg, const Particle &source,
                               int n_frames, const MoveConfig &move_cfg,
                               const RunOptions &opts, FilterStreams &streams,
                               RandomStream &measurement_rng,
                               RandomStream &mobility_rng);

} // namespace radloc
