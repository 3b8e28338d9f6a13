#include <cmath>
#include <stdexcept>
#include <vector>

#include "adamlab/model.hpp"
#include "adamlab/rng.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_CASE("hyperparameters are validated") {
  const AdamHyperparams d;
  CHECK(d.beta1() == 0.9);
  CHECK(d.beta2() == 0.999);
  CHECK(d.epsilon() == 1e-8);
  CHECK_NOTHROW(AdamHyperparams(0.9, 0.9, 1e-8));
  CHECK_THROWS_AS(AdamHyperparams(0.9, 0.5, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(AdamHyperparams(0.9, 0.81, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(AdamHyperparams(0.0, 0.5, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(AdamHyperparams(0.5, 1.0, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(AdamHyperparams(0.5, 0.9, 0.0), std::invalid_argument);
}

TEST_CASE("learning-rate schedules") {
  const auto pl = LearningRateSchedule::power_law(1.0, 0.99);
  CHECK(pl(1) == 1.0);
  CHECK(pl(1000) == doctest::Approx(std::pow(1000.0, -0.99)).epsilon(1e-15));
  for (std::size_t n = 1; n < 2000; ++n) {
    REQUIRE(pl(n + 1) <= pl(n));
    REQUIRE(pl(n) > 0.0);
    REQUIRE(pl.decrement(n) ==
            doctest::Approx(pl(n) - pl(n + 1)).epsilon(1e-9));
  }
  const auto c = LearningRateSchedule::constant(0.1);
  CHECK(c(1) == 0.1);
  CHECK(c(123456) == 0.1);
  CHECK(c.decrement(10) == 0.0);
  const auto t = LearningRateSchedule::table({1.0, 0.5, 0.5, 0.25});
  CHECK(t(2) == 0.5);
  CHECK(t.decrement(1) == 0.5);
  CHECK_THROWS(t(5));
  CHECK_THROWS(t(0));
  CHECK_THROWS_AS(LearningRateSchedule::table({1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(LearningRateSchedule::table({1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(LearningRateSchedule::power_law(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(LearningRateSchedule::power_law(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LearningRateSchedule::constant(-1.0), std::invalid_argument);
}

TEST_CASE("two_point_mean_zero") {
  const auto a = two_point_mean_zero(-1.0, 0.1);
  CHECK(a.p_v() == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
  CHECK(a.p_w() == doctest::Approx(10.0 / 11.0).epsilon(1e-15));
  CHECK(a.dim() == 1);
  CHECK_FALSE(a.symmetric());

  const auto b = two_point_mean_zero(-1.0, 1.0);
  CHECK(b.p_v() == 0.5);
  CHECK(b.symmetric());

  const auto c = two_point_mean_zero(-2.0, 1.0);
  CHECK(c.p_v() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(c.p_w() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(minimizer(QuadraticSOP{c})[0]) <= 1e-15 * 2.0);

  CHECK_THROWS_AS(two_point_mean_zero(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(two_point_mean_zero(-1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(two_point_mean_zero(1.0, 2.0), std::domain_error);
}

TEST_CASE("mean-zero laws have mean zero to rounding") {
  RandomStream rng = make_stream(11, 0);
  for (int k = 0; k < 10'000; ++k) {
    const double v = -std::exp(8.0 * rng.uniform() - 4.0);
    const double w = std::exp(8.0 * rng.uniform() - 4.0);
    const auto d = two_point_mean_zero(v, w);
    REQUIRE(std::abs(d.mean()[0]) <= 1e-15 * std::max(-v, w));
  }
}

TEST_CASE("symmetry predicate") {
  for (double w : {0.25, 0.5, 0.999, 1.0, 1.001, 2.0}) {
    CHECK(two_point_mean_zero(-1.0, w).symmetric() == (w == 1.0));
  }
  CHECK(TwoPointDistribution::point_mass(Point{0.3}).symmetric());
  CHECK(TwoPointDistribution::scalar(-0.7, 1.3, 0.5).symmetric());
  CHECK_FALSE(TwoPointDistribution::scalar(-0.7, 1.3, 0.4).symmetric());
  CHECK(TwoPointDistribution::scalar(-0.7, 1.3, 0.4).mean()[0] ==
        0.4 * -0.7 + 0.6 * 1.3);
}

TEST_CASE("mean and variance, d = 2") {
  const TwoPointDistribution d(Point{-1.0, 2.0}, Point{3.0, 2.0}, 0.25);
  CHECK(d.dim() == 2);
  CHECK(d.mean()[0] == 0.25 * -1.0 + 0.75 * 3.0);
  CHECK(d.mean()[1] == 2.0);
  CHECK(d.variance()[0] == doctest::Approx(0.25 * 0.75 * 16.0));
  CHECK(d.variance()[1] == 0.0);
  CHECK(d.bound() == 3.0);
  CHECK_THROWS_AS(TwoPointDistribution(Point{1.0}, Point{1.0, 2.0}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(TwoPointDistribution(Point{1.0}, Point{2.0}, 1.5),
                  std::invalid_argument);
}

TEST_CASE("sample") {
  RandomStream rng = make_stream(3, 0);
  const auto always_v = TwoPointDistribution::scalar(-1.0, 2.0, 1.0);
  const auto always_w = TwoPointDistribution::scalar(-1.0, 2.0, 0.0);
  for (int k = 0; k < 1000; ++k) {
    REQUIRE(sample(always_v, rng)[0] == -1.0);
    REQUIRE(sample(always_w, rng)[0] == 2.0);
  }

  // one uniform per draw: a parallel stream predicts every outcome
  const auto d = two_point_mean_zero(-1.0, 0.1);
  RandomStream a = make_stream(9, 4);
  RandomStream b = make_stream(9, 4);
  for (int k = 0; k < 1000; ++k) {
    const bool expect_v = b.uniform() < d.p_v();
    REQUIRE((sample(d, a)[0] == -1.0) == expect_v);
  }

  const int n = 1'000'000;
  RandomStream s = make_stream(2024, 1);
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += sample(d, s)[0] == -1.0;
  const double p = 1.0 / 11.0;
  CHECK(std::abs(static_cast<double>(hits) / n - p) <=
        4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("gradient") {
  CHECK(gradient(Point{0.4}, Point{0.4})[0] == 0.0);
  CHECK(gradient(Point{1.0}, Point{0.5})[0] == 1.0);
  const Point g = gradient(Point{1.0, -1.0}, Point{0.0, 0.0});
  CHECK(g == Point{2.0, -2.0});
  CHECK_THROWS_AS(gradient(Point{1.0}, Point{1.0, 2.0}), std::invalid_argument);

  RandomStream rng = make_stream(5, 0);
  for (int k = 0; k < 100; ++k) {
    const Point a{rng.uniform() * 4 - 2, rng.uniform() * 4 - 2};
    const Point b{rng.uniform() * 4 - 2, rng.uniform() * 4 - 2};
    const Point s = gradient(a, b);
    const Point t = gradient(b, a);
    REQUIRE(s[0] + t[0] == 0.0);
    REQUIRE(s[1] + t[1] == 0.0);
  }
}

TEST_CASE("loss") {
  CHECK(QuadraticSOP::loss(Point{1.0, 2.0}, Point{0.0, 0.0}) == 5.0);
}

TEST_CASE("minibatch gradient") {
  const std::vector<Point> self{Point{0.7}};
  CHECK(minibatch_gradient(Point{0.7}, self).value[0] == 0.0);

  const std::vector<Point> two{Point{-1.0}, Point{0.1}};
  const auto g = minibatch_gradient(Point{0.0}, two);
  CHECK(g.value[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(g.batch_size == 2);

  const std::vector<Point> four(4, Point{1.0});
  CHECK(minibatch_gradient(Point{0.0}, four).value[0] == -2.0);

  // identical points: same as the single-sample gradient
  const std::vector<Point> same(5, Point{0.3, -0.2});
  const Point theta{1.1, 0.4};
  const auto gm = minibatch_gradient(theta, same);
  const Point g1 = gradient(theta, same[0]);
  CHECK(gm.value[0] == doctest::Approx(g1[0]).epsilon(1e-15));
  CHECK(gm.value[1] == doctest::Approx(g1[1]).epsilon(1e-15));

  CHECK_THROWS_AS(minibatch_gradient(Point{0.0}, std::vector<Point>{}),
                  std::invalid_argument);
}

TEST_CASE("minibatch gradient is bounded by 2(C + c)") {
  const auto d = two_point_mean_zero(-1.0, 0.1);
  RandomStream rng = make_stream(6, 0);
  for (int k = 0; k < 1000; ++k) {
    const double theta = 6.0 * rng.uniform() - 3.0;
    std::vector<Point> batch;
    for (int m = 0; m < 3; ++m) batch.push_back(sample(d, rng));
    const double g = minibatch_gradient(Point{theta}, batch).value[0];
    REQUIRE(std::abs(g) <= 2.0 * (std::abs(theta) + d.bound()));
  }
}

TEST_CASE("minimizer") {
  CHECK(minimizer(QuadraticSOP{two_point_mean_zero(-1.0, 0.1)})[0] ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(minimizer(QuadraticSOP{TwoPointDistribution::point_mass(Point{0.3})})[0] ==
        0.3);
}
