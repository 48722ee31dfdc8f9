#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radloc/detector_model.hpp"
#include "radloc/random.hpp"

namespace radloc {

/// One step's vector of detector counts.
struct MeasurementFrame {
  int time_index = 1; // k >= 1
  std::vector<std::int64_t> counts;
};

/// Draws each detector count from Poisson(u_j(source) + B_j * dwell_j) with
/// u_j from the chosen forward model.
MeasurementFrame simulate_observation(const Particle &source,
                                      std::span<const DetectorSpec> dets,
                                      const Scene &scene, ForwardModel model,
                                      RandomStream &rng, int time_index = 1);

/// Subtracts a fresh Poisson background sample per detector and clamps
/// negative results to zero.
MeasurementFrame subtract_background(const MeasurementFrame &raw,
                                     std::span<const double> bg_means,
                                     RandomStream &rng);

/// n_frames independent frames with counts_j ~ Poisson(base_means[j]).
std::vector<MeasurementFrame>
augment_measurements(std::span<const double> base_means, int n_frames,
                     RandomStream &rng);

} // namespace radloc
