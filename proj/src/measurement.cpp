#include "radloc/measurement.hpp"

#include <cmath>
#include <stdexcept>

namespace radloc {

MeasurementFrame simulate_observation(const Particle &source,
                                      std::span<const DetectorSpec> dets,
                                      const Scene &scene, ForwardModel model,
                                      RandomStream &rng, int time_index) {
  MeasurementFrame frame;
  frame.time_index = time_index;
  frame.counts.reserve(dets.size());
  for (const DetectorSpec &det : dets) {
    const double u = model == ForwardModel::QA ? qa_response(source, det)
                                               : rt_response(source, det, scene);
    const double mean = u + det.background_rate * det.dwell;
    if (!std::isfinite(mean))
      throw std::invalid_argument("simulate_observation: non-finite mean");
    frame.counts.push_back(rng.poisson(mean));
  }
  return frame;
}

MeasurementFrame subtract_background(const MeasurementFrame &raw,
                                     std::span<const double> bg_means,
                                     RandomStream &rng) {
  if (raw.counts.size() != bg_means.size())
    throw std::invalid_argument(
        "subtract_background: counts and background means lengths differ");
  MeasurementFrame out;
  out.time_index = raw.time_index;
  out.counts.reserve(raw.counts.size());
  for (std::size_t j = 0; j < raw.counts.size(); ++j) {
    const std::int64_t b = rng.poisson(bg_means[j]);
    out.counts.push_back(std::max<std::int64_t>(raw.counts[j] - b, 0));
  }
  return out;
}

std::vector<MeasurementFrame>
augment_measurements(std::span<const double> base_means, int n_frames,
                     RandomStream &rng) {
  if (n_frames < 1)
    throw std::invalid_argument("augment_measurements: n_frames must be >= 1");
  for (double m : base_means)
    if (m < 0.0 || !std::isfinite(m))
      throw std::invalid_argument("augment_measurements: negative mean");

  std::vector<MeasurementFrame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 1; k <= n_frames; ++k) {
    MeasurementFrame f;
    f.time_index = k;
    f.counts.reserve(base_means.size());
    for (double m : base_means)
      f.counts.push_back(rng.poisson(m));
    frames.push_back(std::move(f));
  }
  return frames;
}

} // namespace radloc
