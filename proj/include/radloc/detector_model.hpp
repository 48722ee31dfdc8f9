#pragma once

#include <cstdint>
#include <span>

#include "radloc/geometry.hpp"

namespace radloc {

/// Distance clamp protecting the 1/d^2 response when a particle lands on a
/// detector. Clamping preserves ordering and keeps weights finite.
inline constexpr double kDistanceFloorM = 0.1;

/// Floor applied to the expected count inside ln(u); a fully blocked ray with
/// observed counts then gets a near-minimal but finite weight.
inline constexpr double kExpectedCountFloor = 1e-12;

/// Count-rate detector: position plus the response constants that scale the
/// expected number of source counts per frame.
struct DetectorSpec {
  Point2 position;
  double area = 0.0;            // m^2
  double efficiency = 0.0;      // (0, 1]
  double dwell = 0.0;           // seconds per frame
  double background_rate = 0.0; // counts/second
};

/// Throws std::invalid_argument when a field violates its range.
void validate(const DetectorSpec &det);

/// Candidate source hypothesis: planar position and activity.
struct Particle {
  double x = 0.0;         // meters
  double y = 0.0;         // meters
  double intensity = 0.0; // Bq

  Point2 position() const { return {x, y}; }
};

enum class ForwardModel { QA, RT };

/// Poisson likelihood, or the Gaussian alternative with a fixed sigma.
struct LikelihoodMode {
  enum class Kind { Poisson, Gaussian };
  Kind kind = Kind::Poisson;
  double sigma = 0.0; // counts; Gaussian only

  static LikelihoodMode poisson() { return {Kind::Poisson, 0.0}; }
  static LikelihoodMode gaussian(double sigma);
};

/// Free-field expected source counts: I*eps*A*dt / (4 pi d^2), with d clamped
/// at kDistanceFloorM. Background is not included.
double qa_response(const Particle &p, const DetectorSpec &det);

/// qa_response attenuated by exp(-sum of chord/mean_free_path) over the
/// buildings crossed between particle and detector.
double rt_response(const Particle &p, const DetectorSpec &det,
                   const Scene &scene);

/// Joint log-probability of the observed counts given expected counts.
/// Poisson: sum of y ln(u) - u - ln(y!); Gaussian: -d/2 ln(2 pi s^2) - SS/2s^2.
double log_likelihood(std::span<const std::int64_t> observed,
                      std::span<const double> expected, LikelihoodMode mode);

} // namespace radloc
