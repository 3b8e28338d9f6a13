#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "adamlab/errors.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/rng.hpp"
#include "adamlab/vectorfield.hpp"
#include "doctest.h"

using namespace adamlab;

namespace {

// Raw oracle: walks every individual draw (2^(M (N+1)) outcomes), forms each
// batch mean directly and evaluates the truncated ratio. No binomial collapse.
double raw_enumeration(double v, double w, double p_v, double theta,
                       double b1, double b2, double eps, std::size_t m,
                       std::size_t n_terms) {
  const std::size_t draws = m * (n_terms + 1);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << draws); ++mask) {
    double prob = 1.0;
    double num = 0.0;
    double den = 0.0;
    double p1 = 1.0;
    double p2 = 1.0;
    for (std::size_t n = 0; n <= n_terms; ++n) {
      double xbar = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const bool is_v = (mask >> (n * m + j)) & 1U;
        prob *= is_v ? p_v : 1.0 - p_v;
        xbar += is_v ? v : w;
      }
      xbar /= static_cast<double>(m);
      const double g = 2.0 * (theta - xbar);
      num += p1 * g;
      den += p2 * g * g;
      p1 *= b1;
      p2 *= b2;
    }
    total += prob * num / (eps + std::sqrt((1.0 - b2) * den));
  }
  return -(1.0 - b1) * total;
}

}  // namespace

TEST_CASE("single-term expectation, frozen values") {
  // mpmath at 30 digits: 0.1 * (p 2v / (eps + 2 sqrt(1-b2) |v|) + (1-p) ...)
  const auto d = two_point_mean_zero(-1.0, 0.1);
  CHECK(vf_truncated_exact(d, 0.0, AdamHyperparams(0.9, 0.999, 1e-8), 1, 0) ==
        doctest::Approx(2.5873135855994901589).epsilon(1e-13));
  CHECK(vf_truncated_exact(d, 0.0, AdamHyperparams(0.9, 0.9, 1e-8), 1, 0) ==
        doctest::Approx(0.25873176355923821606).epsilon(1e-13));
}

TEST_CASE("two-term sum by hand") {
  // N = 1, M = 1, four paths (x0, x1); theta = 0.5, data (-1, 2) with p = 2/3
  const auto d = two_point_mean_zero(-1.0, 2.0);
  const double b1 = 0.8, b2 = 0.9, eps = 1e-3, theta = 0.5;
  const double pv = 2.0 / 3.0;
  double sum = 0.0;
  for (double x0 : {-1.0, 2.0}) {
    for (double x1 : {-1.0, 2.0}) {
      const double p = (x0 < 0 ? pv : 1 - pv) * (x1 < 0 ? pv : 1 - pv);
      const double g0 = 2 * (theta - x0), g1 = 2 * (theta - x1);
      sum += p * (g0 + b1 * g1) /
             (eps + std::sqrt((1 - b2) * (g0 * g0 + b2 * g1 * g1)));
    }
  }
  const double expect = -(1 - b1) * sum;
  CHECK(vf_truncated_exact(d, theta, AdamHyperparams(b1, b2, eps), 1, 1) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("binomial enumeration agrees with raw enumeration") {
  RandomStream rng = make_stream(404, 0);
  for (int k = 0; k < 30; ++k) {
    const double b1 = 0.5 + 0.45 * rng.uniform();
    const double b2 = b1 * b1 + 0.01 + (0.999 - b1 * b1 - 0.01) * rng.uniform();
    const double v = -0.2 - 1.8 * rng.uniform();
    const double w = 0.1 + 1.9 * rng.uniform();
    const auto d = two_point_mean_zero(v, w);
    const std::size_t m = 1 + static_cast<std::size_t>(3 * rng.uniform());
    const std::size_t n = static_cast<std::size_t>((m == 1 ? 9 : 4) * rng.uniform());
    const double theta = 2 * rng.uniform() - 1;
    const AdamHyperparams hp(b1, b2, 1e-8);
    const double raw = raw_enumeration(v, w, d.p_v(), theta, b1, b2, 1e-8, m, n);
    REQUIRE(vf_truncated_exact(d, theta, hp, m, n) ==
            doctest::Approx(raw).epsilon(1e-11));
  }
  CHECK_THROWS_AS(vf_truncated_exact(two_point_mean_zero(-1.0, 1.0), 0.0,
                                     AdamHyperparams{}, 2, 30, 1000),
                  std::invalid_argument);
}

TEST_CASE("Monte Carlo agrees with exact enumeration on tiny configs") {
  RandomStream rng = make_stream(77, 0);
  for (int k = 0; k < 10; ++k) {
    const double b1 = 0.5 + 0.45 * rng.uniform();
    const double b2 = b1 * b1 + 0.01 + (0.999 - b1 * b1 - 0.01) * rng.uniform();
    const AdamHyperparams hp(b1, b2, 1e-8);
    const QuadraticSOP sop{two_point_mean_zero(-0.2 - 1.8 * rng.uniform(),
                                               0.1 + 1.9 * rng.uniform())};
    const std::size_t m = 1 + static_cast<std::size_t>(2 * rng.uniform());
    TruncationPolicy policy;
    policy.fixed_terms = static_cast<std::size_t>(7 * rng.uniform());
    const double th[1] = {2 * rng.uniform() - 1};
    const double exact = vf_truncated_exact(sop.data, th[0], hp, m, *policy.fixed_terms);
    for (auto est : {VFEstimator::plain, VFEstimator::conditioned}) {
      const VFEstimate e = estimate_vf(sop, th, hp, m, policy, 20'000,
                                       derive_seed(1, static_cast<std::uint64_t>(k)), est);
      REQUIRE(std::abs(e.value[0] - exact) <= 4.0 * e.std_error[0] + 1e-12);
    }
  }
}

TEST_CASE("point mass: closed form, zero standard error") {
  const AdamHyperparams hp(0.9, 0.99, 1e-8);
  CHECK(vf_deterministic(Point{0.0}, Point{1.0}, hp)[0] ==
        doctest::Approx(-2.0 / (1e-8 + 2.0)).epsilon(1e-15));
  CHECK(vf_deterministic(Point{0.3}, Point{0.3}, hp)[0] == 0.0);
  CHECK(vf_deterministic(Point{1.0}, Point{-1.0}, hp)[0] ==
        doctest::Approx(4.0 / (1e-8 + 4.0)).epsilon(1e-15));
  const Point two = vf_deterministic(Point{0.0, 0.0}, Point{0.5, -2.0}, hp);
  CHECK(two[0] < 0.0);
  CHECK(two[1] > 0.0);

  for (double x0 : {0.0, 0.7, -1.3}) {
    const QuadraticSOP sop{TwoPointDistribution::point_mass(Point{x0})};
    for (double t : {-2.0, 0.25, 1.5}) {
      const double th[1] = {t};
      const double closed = vf_deterministic(Point{x0}, th, hp)[0];
      const VFEstimate e = estimate_vf(sop, th, hp, 1, TruncationPolicy{}, 8, 3);
      CHECK(std::abs(e.value[0] - closed) <= 1e-12);
      CHECK(e.std_error[0] == 0.0);
      // odd about x0
      const double mirror[1] = {2 * x0 - t};
      CHECK(vf_deterministic(Point{x0}, mirror, hp)[0] == -closed);
    }
  }
}

TEST_CASE("symmetric data: the paired estimate vanishes at the mean") {
  const QuadraticSOP sop{two_point_mean_zero(-1.0, 1.0)};
  const AdamHyperparams hp(0.9, 0.9, 1e-8);
  const VFPathSet paths(sop.data, 1, hp, TruncationPolicy{}, 2000, 5);
  const double zero[1] = {0.0};
  CHECK(paths.evaluate_paired(zero).value[0] == 0.0);
  CHECK(paths.evaluate_paired(zero, VFEstimator::conditioned).value[0] == 0.0);

  const VFEstimate plain = paths.evaluate(zero);
  CHECK(std::abs(plain.value[0]) <= 4.0 * plain.std_error[0]);

  for (double t : {0.05, 0.3, 1.1}) {
    const double a[1] = {t};
    const double b[1] = {-t};
    CHECK(paths.evaluate_paired(a).value[0] == -paths.evaluate_paired(b).value[0]);
    CHECK(paths.evaluate_paired(a).value[0] < 0.0);
  }

  const VFPathSet skew(two_point_mean_zero(-1.0, 0.1), 1, hp, TruncationPolicy{}, 10, 5);
  CHECK_THROWS(skew.evaluate_paired(zero));
}

TEST_CASE("asymmetric data: the field is positive at the minimizer") {
  // v = -1 rare, w = 0.1 frequent: the field at 0 is positive, so the zero
  // sits at theta* > 0
  const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.1)};
  const AdamHyperparams hp(0.9, 0.9, 1e-8);
  const double zero[1] = {0.0};
  const VFEstimate e = estimate_vf(sop, zero, hp, 1, TruncationPolicy{}, 20'000, 9,
                                   VFEstimator::conditioned);
  CHECK(e.value[0] - 4.0 * e.std_error[0] > 0.0);

  // mirrored data: the sign flips
  const QuadraticSOP flip{two_point_mean_zero(-0.1, 1.0)};
  const VFEstimate f = estimate_vf(flip, zero, hp, 1, TruncationPolicy{}, 20'000, 9,
                                   VFEstimator::conditioned);
  CHECK(f.value[0] + 4.0 * f.std_error[0] < 0.0);
}

TEST_CASE("conditioned and plain estimators share their mean") {
  const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.25)};
  const AdamHyperparams hp(0.9, 0.99, 1e-8);
  for (double t : {-0.5, 0.0, 0.02, 0.4}) {
    const double th[1] = {t};
    const VFEstimate a = estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 4000, 11,
                                     VFEstimator::plain);
    const VFEstimate b = estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 4000, 12,
                                     VFEstimator::conditioned);
    const double se = std::hypot(a.std_error[0], b.std_error[0]);
    CHECK(std::abs(a.value[0] - b.value[0]) <= 4.0 * se);
    CHECK(b.std_error[0] <= a.std_error[0]);
  }
}

TEST_CASE("truncation policy") {
  TruncationPolicy p;
  const AdamHyperparams hp(0.9, 0.99, 1e-8);
  const std::size_t n = p.terms(hp);
  CHECK(std::pow(0.99, static_cast<double>(n + 1)) < 1e-12);
  CHECK(std::pow(0.99, static_cast<double>(n)) >= 1e-12);
  const std::size_t n1 = p.numerator_terms(hp);
  CHECK(n1 <= n);
  const double r = 0.9 / std::sqrt(0.99);
  const double tail = 0.1 / std::sqrt(0.01) * std::pow(r, static_cast<double>(n1 + 1)) / (1 - r);
  CHECK(tail < 1e-12);
  CHECK(0.1 / std::sqrt(0.01) * std::pow(r, static_cast<double>(n1)) / (1 - r) >= 1e-12);
  p.fixed_terms = 5;
  CHECK(p.terms(hp) == 5);

  const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.1)};
  const double th[1] = {0.1};
  TruncationPolicy fixed;
  fixed.fixed_terms = 3;
  CHECK(estimate_vf(sop, th, hp, 1, fixed, 10, 1).truncation_N == 3);
  CHECK(estimate_vf(sop, th, hp, 1, TruncationPolicy{}, 10, 1).truncation_N == n);
}

TEST_CASE("kernel matches the serial reference bit for bit") {
  const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.3)};
  const AdamHyperparams hp(0.9, 0.95, 1e-8);
  for (std::size_t m : {1u, 3u}) {
    for (auto est : {VFEstimator::plain, VFEstimator::conditioned}) {
      const double th[1] = {0.07};
      const VFEstimate a = estimate_vf(sop, th, hp, m, TruncationPolicy{}, 500, 21, est);
      const VFEstimate b = serial::estimate_vf(sop, th, hp, m, TruncationPolicy{}, 500, 21, est);
      CHECK(a.value[0] == doctest::Approx(b.value[0]).epsilon(1e-12));
      CHECK(a.std_error[0] == doctest::Approx(b.std_error[0]).epsilon(1e-9));
    }
  }
}

TEST_CASE("find_zero_1d") {
  const AdamHyperparams hp(0.9, 0.9, 1e-8);
  SUBCASE("point mass: the zero is the point") {
    const QuadraticSOP sop{TwoPointDistribution::point_mass(Point{0.3})};
    const ZeroResult z = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 16, {-2.0, 2.0}, 1e-10, 1);
    CHECK(std::abs(z.theta_star - 0.3) <= 1e-10);
    CHECK(z.monotonicity_verified);
    CHECK(z.bracket.first <= z.theta_star);
    CHECK(z.bracket.second >= z.theta_star);
    CHECK(z.slope < 0.0);
  }
  SUBCASE("symmetric data: zero at the mean") {
    const QuadraticSOP sop{two_point_mean_zero(-1.0, 1.0)};
    const ZeroResult z = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 20'000,
                                      default_bracket(sop.data), 1e-6, 2);
    CHECK(std::abs(z.theta_star) <= z.uncertainty);
    CHECK(std::abs(z.residual.value[0]) <= 4.0 * z.residual.std_error[0]);
  }
  SUBCASE("asymmetric data: zero above the minimizer") {
    const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.1)};
    const ZeroResult z = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 20'000,
                                      default_bracket(sop.data), 1e-6, 3);
    CHECK(z.theta_star > z.uncertainty);
    CHECK(z.theta_star < 0.1);
    CHECK(z.monotonicity_verified);
    CHECK(std::abs(z.residual.value[0]) <= 4.0 * z.residual.std_error[0]);
  }
  SUBCASE("a bracket without a sign change is rejected") {
    const QuadraticSOP sop{TwoPointDistribution::point_mass(Point{0.3})};
    CHECK_THROWS_AS(find_zero_1d(sop, hp, 1, TruncationPolicy{}, 16, {0.5, 2.0}, 1e-8, 1),
                    bracket_error);
  }
  const auto br = default_bracket(two_point_mean_zero(-1.0, 0.1));
  CHECK(br.first == doctest::Approx(-1.1));
  CHECK(br.second == doctest::Approx(1.1));
}

TEST_CASE("half-concave map") {
  CHECK(half_concave_map(1.0, 0.0, 4.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(half_concave_map(0.0, 1.0, 1.0, 0.1) == 0.0);
  std::vector<double> grid;
  for (int k = 1; k <= 50; ++k) {
    grid.push_back(0.1 * k);
    grid.push_back(-0.1 * k);
  }
  const HalfConcavityReport r = half_concavity_probe(0.5, 2.0, 1e-2, grid);
  CHECK(r.oddness_defect == 0.0);
  CHECK(r.increasing);
  CHECK(r.concave_on_positive);
  CHECK(r.min_derivative > 0.0);
  CHECK(r.max_second_derivative_positive <= 0.0);
}
