#include "radloc/detector_model.hpp"

#include <cmath>
#include <stdexcept>

namespace radloc {

void validate(const DetectorSpec &det) {
  if (!std::isfinite(det.position.x) || !std::isfinite(det.position.y))
    throw std::invalid_argument("detector position must be finite");
  if (!(det.area > 0.0) || !std::isfinite(det.area))
    throw std::invalid_argument("detector area must be positive");
  if (!(det.efficiency > 0.0) || det.efficiency > 1.0)
    throw std::invalid_argument("detector efficiency must be in (0, 1]");
  if (!(det.dwell > 0.0) || !std::isfinite(det.dwell))
    throw std::invalid_argument("detector dwell must be positive");
  if (det.background_rate < 0.0 || !std::isfinite(det.background_rate))
    throw std::invalid_argument("detector background rate must be nonnegative");
}

LikelihoodMode LikelihoodMode::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("gaussian likelihood sigma must be positive");
  return {Kind::Gaussian, sigma};
}

double qa_response(const Particle &p, const DetectorSpec &det) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.intensity))
    throw std::invalid_argument("qa_response: particle is not finite");
  if (!std::isfinite(det.position.x) || !std::isfinite(det.position.y))
    throw std::invalid_argument("qa_response: detector position is not finite");
  const double d = std::max(distance(p.position(), det.position), kDistanceFloorM);
  return p.intensity * det.efficiency * det.area * det.dwell /
         (4.0 * M_PI * d * d);
}

double rt_response(const Particle &p, const DetectorSpec &det,
                   const Scene &scene) {
  const double free_field = qa_response(p, det);
  if (distance(p.position(), det.position) < 1e-12)
    return free_field; // coincident points: no ray to trace
  double optical_depth = 0.0;
  for (const ChordHit &hit : chord_lengths(p.position(), det.position, scene))
    optical_depth +=
        hit.length / scene.buildings()[hit.building_index].mean_free_path();
  return free_field * std::exp(-optical_depth);
}

double log_likelihood(std::span<const std::int64_t> observed,
                      std::span<const double> expected, LikelihoodMode mode) {
  if (observed.size() != expected.size())
    throw std::invalid_argument(
        "log_likelihood: observed and expected lengths differ");

  if (mode.kind == LikelihoodMode::Kind::Gaussian) {
    double ss = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
      if (observed[j] < 0)
        throw std::invalid_argument("log_likelihood: negative observed count");
      const double r = static_cast<double>(observed[j]) - expected[j];
      ss += r * r;
    }
    const double s2 = mode.sigma * mode.sigma;
    return -0.5 * static_cast<double>(observed.size()) *
               std::log(2.0 * M_PI * s2) -
           ss / (2.0 * s2);
  }

  double ll = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    const std::int64_t y = observed[j];
    if (y < 0)
      throw std::invalid_argument("log_likelihood: negative observed count");
    const double u = expected[j];
    const double yd = static_cast<double>(y);
    // ln(y!) via log-gamma, overflow-free for large counts
    ll += yd * std::log(std::max(u, kExpectedCountFloor)) - u -
          std::lgamma(yd + 1.0);
  }
  return ll;
}

} // namespace radloc
