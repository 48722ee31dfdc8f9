#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "radloc/detector_model.hpp"
#include "radloc/random.hpp"

using namespace radloc;

namespace {

Scene empty_scene(double half = 300.0) {
  return Scene(BoundingBox{{-half, -half}, {half, half}}, {},
               IntensityRange{1.0, 1e12});
}

double spearman(std::vector<double> a, std::vector<double> b) {
  const auto ranks = [](std::vector<double> &v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
      r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(ra.size());
  const double mean = (n - 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

} // namespace

TEST_CASE("free-field response at unit parameters") {
  const DetectorSpec det{{1.0, 0.0}, 1.0, 1.0, 1.0, 0.0};
  const Particle p{0.0, 0.0, 1.0};
  CHECK(qa_response(p, det) ==
        doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("urban detector 4 against the closed form") {
  // 8.7 mCi source at (158, 98) against the detector at (190.2, 50.1)
  const DetectorSpec det{{190.2, 50.1}, 0.0058, 0.62, 5.0, 300.0};
  const Particle p{158.0, 98.0, 3.219e8};
  const double d2 = (190.2 - 158.0) * (190.2 - 158.0) +
                    (50.1 - 98.0) * (50.1 - 98.0);
  CHECK(d2 == doctest::Approx(3331.25).epsilon(1e-12));
  const double expected = 3.219e8 * 0.62 * 0.0058 * 5.0 / (4.0 * M_PI * d2);
  CHECK(qa_response(p, det) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(qa_response(p, det) == doctest::Approx(138.26).epsilon(1e-3));
}

TEST_CASE("inverse square law and monotonicity") {
  const DetectorSpec d1{{1.0, 0.0}, 1.0, 0.5, 2.0, 0.0};
  const DetectorSpec d2{{2.0, 0.0}, 1.0, 0.5, 2.0, 0.0};
  const Particle p{0.0, 0.0, 5.0};
  CHECK(qa_response(p, d1) == doctest::Approx(4.0 * qa_response(p, d2)));

  const Particle stronger{0.0, 0.0, 7.0};
  CHECK(qa_response(stronger, d1) > qa_response(p, d1));
}

TEST_CASE("distance floor clamps instead of diverging") {
  const DetectorSpec det{{0.0, 0.0}, 1.0, 1.0, 1.0, 0.0};
  const Particle on_top{0.0, 0.0, 1.0};
  const Particle near{0.05, 0.0, 1.0};
  const Particle at_floor{0.1, 0.0, 1.0};
  CHECK(std::isfinite(qa_response(on_top, det)));
  CHECK(qa_response(on_top, det) == qa_response(near, det));
  CHECK(qa_response(on_top, det) == qa_response(at_floor, det));
}

TEST_CASE("non-finite inputs are rejected") {
  const DetectorSpec det{{1.0, 0.0}, 1.0, 1.0, 1.0, 0.0};
  CHECK_THROWS_AS(
      qa_response(Particle{std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0},
                  det),
      std::invalid_argument);
  CHECK_THROWS_AS(
      qa_response(Particle{0.0, 0.0, std::numeric_limits<double>::infinity()},
                  det),
      std::invalid_argument);
}

TEST_CASE("ray-traced response degenerates to free field without buildings") {
  const Scene scene = empty_scene();
  RandomStream rng(3, 9);
  for (int i = 0; i < 200; ++i) {
    const Particle p{rng.uniform(-200, 200), rng.uniform(-200, 200),
                     rng.uniform(1e5, 1e9)};
    const DetectorSpec det{{rng.uniform(-200, 200), rng.uniform(-200, 200)},
                           0.0058, 0.62, 5.0, 300.0};
    const double qa = qa_response(p, det);
    const double rt = rt_response(p, det, scene);
    CHECK(rt == doctest::Approx(qa).epsilon(1e-12));
  }
}

TEST_CASE("one mean free path attenuates by 1/e") {
  // unit square with mean free path equal to the chord
  const Scene scene(BoundingBox{{-10, -10}, {10, 10}},
                    {BuildingPolygon({{0, -1}, {1, -1}, {1, 1}, {0, 1}}, 1.0)},
                    IntensityRange{1.0, 1e12});
  const DetectorSpec det{{3.0, 0.0}, 1.0, 1.0, 1.0, 0.0};
  const Particle p{-2.0, 0.0, 10.0};
  CHECK(rt_response(p, det, scene) ==
        doctest::Approx(std::exp(-1.0) * qa_response(p, det)).epsilon(1e-12));
}

TEST_CASE("optical depths add across buildings") {
  // first chord is 1 with lambda 1, second chord is 1 with lambda 0.5
  const Scene scene(
      BoundingBox{{-10, -10}, {10, 10}},
      {BuildingPolygon({{0, -1}, {1, -1}, {1, 1}, {0, 1}}, 1.0),
       BuildingPolygon({{2, -1}, {3, -1}, {3, 1}, {2, 1}}, 0.5)},
      IntensityRange{1.0, 1e12});
  const DetectorSpec det{{5.0, 0.0}, 1.0, 1.0, 1.0, 0.0};
  const Particle p{-2.0, 0.0, 10.0};
  CHECK(rt_response(p, det, scene) ==
        doctest::Approx(std::exp(-3.0) * qa_response(p, det)).epsilon(1e-12));
}

TEST_CASE("attenuation never amplifies") {
  const Scene scene(BoundingBox{{-10, -10}, {10, 10}},
                    {BuildingPolygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, 0.3)},
                    IntensityRange{1.0, 1e12});
  RandomStream rng(5, 11);
  for (int i = 0; i < 300; ++i) {
    const Particle p{rng.uniform(-9, 9), rng.uniform(-9, 9),
                     rng.uniform(1e3, 1e6)};
    const DetectorSpec det{{rng.uniform(-9, 9), rng.uniform(-9, 9)}, 0.01, 0.6,
                           1.0, 0.0};
    CHECK(rt_response(p, det, scene) <= qa_response(p, det) * (1.0 + 1e-12));
  }
}

TEST_CASE("poisson log likelihood on pinned values") {
  const std::vector<std::int64_t> y0 = {0};
  const std::vector<double> u1 = {1.0};
  CHECK(log_likelihood(y0, u1, LikelihoodMode::poisson()) ==
        doctest::Approx(-1.0).epsilon(1e-15));

  const std::vector<std::int64_t> y3 = {3};
  const std::vector<double> u2 = {2.0};
  CHECK(log_likelihood(y3, u2, LikelihoodMode::poisson()) ==
        doctest::Approx(std::log(8.0 / 6.0) - 2.0).epsilon(1e-12));
  CHECK(log_likelihood(y3, u2, LikelihoodMode::poisson()) ==
        doctest::Approx(-1.712318).epsilon(1e-6));
}

TEST_CASE("gaussian log likelihood at zero residual") {
  const std::vector<std::int64_t> y = {4, 9};
  const std::vector<double> u = {4.0, 9.0};
  CHECK(log_likelihood(y, u, LikelihoodMode::gaussian(1.0)) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("likelihood kernel rejects malformed input") {
  const std::vector<std::int64_t> y = {1, 2};
  const std::vector<double> u = {1.0};
  CHECK_THROWS_AS(log_likelihood(y, u, LikelihoodMode::poisson()),
                  std::invalid_argument);
  const std::vector<std::int64_t> neg = {-1};
  const std::vector<double> u1 = {1.0};
  CHECK_THROWS_AS(log_likelihood(neg, u1, LikelihoodMode::poisson()),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_likelihood(neg, u1, LikelihoodMode::gaussian(1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(LikelihoodMode::gaussian(0.0), std::invalid_argument);
}

TEST_CASE("fully blocked ray keeps the weight finite") {
  const std::vector<std::int64_t> y = {50};
  const std::vector<double> u = {0.0};
  const double ll = log_likelihood(y, u, LikelihoodMode::poisson());
  CHECK(std::isfinite(ll));
  CHECK(ll < -1000.0); // near-minimal, still comparable
}

TEST_CASE("poisson likelihood peaks at floor of the mean") {
  const double u = 4.7;
  const std::vector<double> us = {u};
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t best_y = -1;
  for (std::int64_t y = 0; y <= 47; ++y) {
    const std::vector<std::int64_t> ys = {y};
    const double ll = log_likelihood(ys, us, LikelihoodMode::poisson());
    if (ll > best) {
      best = ll;
      best_y = y;
    }
  }
  CHECK(best_y == 4);
}

TEST_CASE("likelihood is permutation equivariant") {
  RandomStream rng(7, 13);
  std::vector<std::int64_t> y;
  std::vector<double> u;
  for (int j = 0; j < 8; ++j) {
    y.push_back(rng.poisson(40.0));
    u.push_back(rng.uniform(20.0, 60.0));
  }
  const double base = log_likelihood(y, u, LikelihoodMode::poisson());
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), std::mt19937(trial));
    std::vector<std::int64_t> py;
    std::vector<double> pu;
    for (std::size_t k : perm) {
      py.push_back(y[k]);
      pu.push_back(u[k]);
    }
    CHECK(log_likelihood(py, pu, LikelihoodMode::poisson()) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("poisson and matched gaussian rank particles alike above 30 counts") {
  // ring of detectors with expected counts around 70..95; candidates near
  // the truth, where both likelihoods are locally quadratic
  std::vector<DetectorSpec> dets;
  for (int j = 0; j < 6; ++j) {
    const double ang = j * M_PI / 3.0;
    dets.push_back(DetectorSpec{{5.0 * std::cos(ang), 5.0 * std::sin(ang)},
                                0.01, 0.62, 1.0, 0.0});
  }
  const Particle truth{0.4, -0.25, 4e6};
  RandomStream rng(11, 17);
  std::vector<std::int64_t> observed;
  double mean_u = 0.0;
  for (const DetectorSpec &d : dets) {
    const double u = qa_response(truth, d);
    REQUIRE(u > 30.0);
    mean_u += u / dets.size();
    observed.push_back(rng.poisson(u));
  }
  const LikelihoodMode gauss = LikelihoodMode::gaussian(std::sqrt(mean_u));

  std::vector<double> lp, lg;
  for (int i = 0; i < 1000; ++i) {
    const Particle p{truth.x + rng.uniform(-0.4, 0.4),
                     truth.y + rng.uniform(-0.4, 0.4),
                     truth.intensity * rng.uniform(0.85, 1.15)};
    std::vector<double> u;
    for (const DetectorSpec &d : dets)
      u.push_back(qa_response(p, d));
    lp.push_back(log_likelihood(observed, u, LikelihoodMode::poisson()));
    lg.push_back(log_likelihood(observed, u, gauss));
  }
  CHECK(spearman(lp, lg) > 0.99);
}
