#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "radloc/measurement.hpp"

using namespace radloc;

namespace {

Scene open_scene() {
  return Scene(BoundingBox{{-500, -500}, {500, 500}}, {},
               IntensityRange{1.0, 1e12});
}

} // namespace

TEST_CASE("zero background and negligible source give zero counts") {
  const Scene scene = open_scene();
  const std::vector<DetectorSpec> dets = {
      {{100.0, 0.0}, 0.0058, 0.62, 5.0, 0.0},
      {{0.0, 100.0}, 0.0058, 0.62, 5.0, 0.0}};
  const Particle source{0.0, 0.0, 1e-20};
  RandomStream rng(1, streams::kMeasurement);
  for (int k = 0; k < 50; ++k) {
    const MeasurementFrame f =
        simulate_observation(source, dets, scene, ForwardModel::QA, rng);
    for (std::int64_t c : f.counts)
      CHECK(c == 0);
  }
}

TEST_CASE("background-only counts match B times dwell") {
  // B = 300 cps, dwell 5 s: mean 1500 per frame
  const Scene scene = open_scene();
  const std::vector<DetectorSpec> dets = {
      {{200.0, 0.0}, 0.0058, 0.62, 5.0, 300.0},
      {{-200.0, 0.0}, 0.0058, 0.62, 5.0, 300.0}};
  const Particle source{0.0, 0.0, 1.0}; // negligible
  RandomStream rng(2, streams::kMeasurement);

  const int n = 10000;
  std::vector<double> sum(dets.size(), 0.0), sum2(dets.size(), 0.0);
  for (int k = 0; k < n; ++k) {
    const MeasurementFrame f =
        simulate_observation(source, dets, scene, ForwardModel::QA, rng, k + 1);
    for (std::size_t j = 0; j < dets.size(); ++j) {
      sum[j] += static_cast<double>(f.counts[j]);
      sum2[j] += static_cast<double>(f.counts[j]) * f.counts[j];
    }
  }
  const double se = std::sqrt(1500.0 / n);
  for (std::size_t j = 0; j < dets.size(); ++j) {
    const double mean = sum[j] / n;
    const double var = sum2[j] / n - mean * mean;
    CHECK(std::fabs(mean - 1500.0) <= 3.0 * se);
    CHECK(var / mean >= 0.9); // Fano factor
    CHECK(var / mean <= 1.1);
  }
}

TEST_CASE("simulation is bit-reproducible under the same stream") {
  const Scene scene = open_scene();
  const std::vector<DetectorSpec> dets = {{{5.0, 5.0}, 0.0058, 0.62, 5.0, 300.0},
                                          {{-5.0, 3.0}, 0.0058, 0.62, 5.0, 10.0}};
  const Particle source{0.0, 0.0, 1e9};
  RandomStream a(7, streams::kMeasurement), b(7, streams::kMeasurement);
  for (int k = 1; k <= 100; ++k) {
    const MeasurementFrame fa =
        simulate_observation(source, dets, scene, ForwardModel::QA, a, k);
    const MeasurementFrame fb =
        simulate_observation(source, dets, scene, ForwardModel::QA, b, k);
    CHECK(fa.counts == fb.counts);
    CHECK(fa.time_index == k);
  }
}

TEST_CASE("background subtraction matches an explicitly cloned draw") {
  MeasurementFrame raw;
  raw.time_index = 4;
  raw.counts = {10, 5, 0, 200};
  const std::vector<double> bg = {6.0, 8.0, 3.0, 150.0};
  RandomStream rng(9, streams::kBackground);
  RandomStream clone(9, streams::kBackground);

  const MeasurementFrame out = subtract_background(raw, bg, rng);
  REQUIRE(out.counts.size() == raw.counts.size());
  CHECK(out.time_index == 4);
  for (std::size_t j = 0; j < raw.counts.size(); ++j) {
    const std::int64_t b = clone.poisson(bg[j]);
    CHECK(out.counts[j] == std::max<std::int64_t>(raw.counts[j] - b, 0));
    CHECK(out.counts[j] >= 0);
    CHECK(out.counts[j] <= raw.counts[j]);
  }
}

TEST_CASE("zero background means leave the frame untouched") {
  MeasurementFrame raw;
  raw.counts = {3, 1, 4};
  const std::vector<double> bg = {0.0, 0.0, 0.0};
  RandomStream rng(1, 1);
  CHECK(subtract_background(raw, bg, rng).counts == raw.counts);
}

TEST_CASE("negative differences clamp to zero") {
  MeasurementFrame raw;
  raw.counts = {1};
  const std::vector<double> bg = {50.0};
  RandomStream rng(2, 2);
  for (int i = 0; i < 50; ++i) {
    const auto out = subtract_background(raw, bg, rng);
    CHECK(out.counts[0] >= 0);
  }
}

TEST_CASE("background subtraction validates lengths") {
  MeasurementFrame raw;
  raw.counts = {1, 2};
  const std::vector<double> bg = {1.0};
  RandomStream rng(3, 3);
  CHECK_THROWS_AS(subtract_background(raw, bg, rng), std::invalid_argument);
}

TEST_CASE("augmentation around zero means yields zero frames") {
  const std::vector<double> means = {0.0, 0.0};
  RandomStream rng(4, streams::kAugment);
  const auto frames = augment_measurements(means, 3, rng);
  REQUIRE(frames.size() == 3);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    CHECK(frames[k].time_index == static_cast<int>(k + 1));
    CHECK(frames[k].counts == std::vector<std::int64_t>{0, 0});
  }
}

TEST_CASE("augmented frames have the right mean and are uncorrelated") {
  const std::vector<double> means = {1500.0};
  RandomStream rng(5, streams::kAugment);
  const auto frames = augment_measurements(means, 10000, rng);

  double sum = 0.0;
  for (const auto &f : frames)
    sum += static_cast<double>(f.counts[0]);
  const double mean = sum / frames.size();
  CHECK(std::fabs(mean - 1500.0) <= 3.0 * std::sqrt(1500.0 / frames.size()));

  // lag-1 autocorrelation of an i.i.d. sequence
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k)
    num += (frames[k].counts[0] - mean) * (frames[k + 1].counts[0] - mean);
  for (const auto &f : frames)
    den += (f.counts[0] - mean) * (f.counts[0] - mean);
  CHECK(std::fabs(num / den) <= 0.03);
}

TEST_CASE("augmentation rejects bad arguments") {
  RandomStream rng(6, 6);
  const std::vector<double> ok = {1.0};
  CHECK_THROWS_AS(augment_measurements(ok, 0, rng), std::invalid_argument);
  const std::vector<double> neg = {-2.0};
  CHECK_THROWS_AS(augment_measurements(neg, 5, rng), std::invalid_argument);
}
