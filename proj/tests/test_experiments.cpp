#include <cmath>
#include <stdexcept>
#include <vector>

#include "adamlab/experiments.hpp"
#include "doctest.h"

using namespace adamlab;

namespace {

ErrorSeries synthetic(double exponent, double scale) {
  ErrorSeries s;
  for (std::size_t n : geometric_grid(100'000, 20)) {
    s.points.push_back({n, scale * std::pow(static_cast<double>(n), exponent), 0.0});
  }
  return s;
}

EnsembleConfig small_adam(double w) {
  EnsembleConfig c;
  c.sop = QuadraticSOP{two_point_mean_zero(-1.0, w)};
  c.kind = OptimizerKind::adam(AdamHyperparams(0.9, 0.9, 1e-8));
  c.n_steps = 20'000;
  c.replications = 64;
  c.seed = 5;
  c.zero.replications = 20'000;
  c.zero.abs_tol = 1e-6;
  return c;
}

}  // namespace

TEST_CASE("SGD on a point mass: mean 0.8^n, zero spread") {
  EnsembleConfig c;
  c.sop = QuadraticSOP{TwoPointDistribution::point_mass(Point{0.0})};
  c.kind = OptimizerKind::sgd();
  c.schedule = LearningRateSchedule::constant(0.1);
  c.n_steps = 50;
  c.replications = 8;
  c.grid = {1, 2, 5, 10, 50};
  const ErrorSeries s = run_ensemble(c);
  REQUIRE(s.points.size() == 5);
  for (const auto& p : s.points) {
    CHECK(p.mean == doctest::Approx(std::pow(0.8, static_cast<double>(p.n))).epsilon(1e-12));
    CHECK(p.std_error == 0.0);
  }
  CHECK(s.reference == Point{0.0});
  CHECK_FALSE(s.zero.has_value());
  CHECK(s.at(10).n == 10);
  CHECK_THROWS(s.at(3));
  CHECK(s.final().n == 50);
}

TEST_CASE("fit_loglog recovers exact power laws") {
  const RateFit f = fit_loglog(synthetic(-0.5, 3.0), 100, 100'000);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_min >= 100);
  CHECK(f.n_max == 100'000);
  CHECK(f.count > 5);

  const RateFit flat = fit_loglog(synthetic(0.0, 0.2));
  CHECK(std::abs(flat.slope) <= 1e-12);
  CHECK(flat.n_min >= 3000);

  CHECK_THROWS_AS(fit_loglog(synthetic(-1.0, 1.0), 50'000, 60'000), std::invalid_argument);
  ErrorSeries zero = synthetic(-1.0, 1.0);
  zero.points.back().mean = 0.0;
  CHECK_THROWS_AS(fit_loglog(zero, 10, 100'000), std::invalid_argument);

  const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
  const std::vector<double> y{-5.0, -2.5, -1.25, -0.625};
  CHECK(fit_power_law(x, y).slope == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("symmetric data: Adam error decays") {
  EnsembleConfig c = small_adam(1.0);
  const ErrorSeries s = run_ensemble(c);
  CHECK(s.at(20'000).mean < 0.5 * s.at(200).mean);
  const RateFit f = fit_loglog(s, 1000, 20'000);
  CHECK(f.slope < -0.3);
  CHECK(f.slope > -0.8);
}

TEST_CASE("asymmetric data: Adam settles near the field zero") {
  EnsembleConfig c = small_adam(0.1);
  c.error = ErrorMode::signed_distance;
  const ErrorSeries s = run_ensemble(c);
  std::optional<ZeroResult> z;
  const Point ref = resolve_reference(
      [&] {
        EnsembleConfig r = c;
        r.reference = Reference::vf_zero();
        return r;
      }(),
      &z);
  REQUIRE(z.has_value());
  CHECK(ref[0] == z->theta_star);
  CHECK(z->theta_star > 0.02);
  CHECK(z->theta_star < 0.04);
  const SeriesPoint& last = s.final();
  CHECK(std::abs(last.mean - z->theta_star) <= 4.0 * last.std_error + z->uncertainty + 0.005);

  EnsembleConfig e = c;
  e.reference = Reference::vf_zero();
  e.error = ErrorMode::abs_distance;
  const ErrorSeries d = run_ensemble(e);
  REQUIRE(d.zero.has_value());
  CHECK(d.reference[0] == z->theta_star);
  CHECK(d.final().mean < d.at(1000).mean);
}

TEST_CASE("clipped error is at most one") {
  EnsembleConfig c = small_adam(0.5);
  c.n_steps = 500;
  c.theta0 = Point{30.0};
  c.error = ErrorMode::clipped_distance;
  for (const auto& p : run_ensemble(c).points) REQUIRE(p.mean <= 1.0);
}

TEST_CASE("sweeps") {
  SweepOptions zeros_only;
  zeros_only.run_ensembles = false;

  EnsembleConfig pm = small_adam(1.0);
  pm.sop = QuadraticSOP{TwoPointDistribution::point_mass(Point{0.4})};
  pm.zero.replications = 8;
  const std::vector<std::size_t> batches{1, 2};
  for (const auto& row : sweep_batch(pm, batches, zeros_only)) {
    CHECK(std::abs(row.zero.theta_star - 0.4) <= 1e-6);
    CHECK(row.final_mean == 0.0);
  }

  EnsembleConfig sym = small_adam(1.0);
  sym.zero.replications = 5000;
  const std::vector<double> b2{0.5, 0.9, 0.95};
  const auto rows = sweep_beta2(sym, b2, zeros_only);
  REQUIRE(rows.size() == 2);  // 0.5 <= 0.81 is skipped
  CHECK(rows[0].parameter == 0.9);
  for (const auto& row : rows) {
    CHECK(std::abs(row.zero.theta_star) <= row.zero.uncertainty);
  }

  EnsembleConfig asym = small_adam(1.0);
  asym.zero.replications = 5000;
  asym.n_steps = 2000;
  asym.replications = 16;
  const std::vector<double> ws{0.25, 1.0, 4.0};
  const auto ar = sweep_asymmetry(asym, ws);
  REQUIRE(ar.size() == 3);
  CHECK(ar[1].p_v == 0.5);
  CHECK(ar[0].p_v == doctest::Approx(0.2));
  CHECK(ar[0].zero.theta_star > 0.0);
  CHECK(ar[2].zero.theta_star < 0.0);
  CHECK(std::abs(ar[1].zero.theta_star) <= ar[1].zero.uncertainty);
}

TEST_CASE("default grids") {
  const auto b = beta2_grid_default();
  REQUIRE(b.size() == 10);
  CHECK(b.front() == 0.9375);
  CHECK(b.back() == doctest::Approx(1.0 - std::pow(2.0, -9.0)).epsilon(1e-15));
  for (std::size_t k = 1; k < b.size(); ++k) CHECK(b[k] > b[k - 1]);
  const auto w = w_grid_default();
  REQUIRE(w.size() == 16);
  CHECK(w.front() == 1.0 / 256.0);
  CHECK(w.back() == 128.0);
}

TEST_CASE("schedule diagnostics") {
  const auto good = schedule_diagnostics(LearningRateSchedule::power_law(1.0, 0.99), 1'000'000, 2.0);
  CHECK(good.consistent);
  CHECK(good.ratio_decreasing);
  // 0.99 n^-0.01 at n = 1e6
  CHECK(good.tail_ratio_end == doctest::Approx(0.99 * std::pow(1e6, -0.01)).epsilon(1e-3));
  CHECK(good.partial_sum_p == doctest::Approx(1.645).epsilon(0.01));
  CHECK(good.partial_sum_p_increment < 1e-3);
  CHECK(good.divergence_proxy > 10.0);
  CHECK_FALSE(good.verdict.empty());

  const auto harmonic = schedule_diagnostics(LearningRateSchedule::power_law(1.0, 1.0), 1'000'000, 2.0);
  CHECK_FALSE(harmonic.consistent);
  CHECK(harmonic.tail_ratio_end == doctest::Approx(1.0).epsilon(1e-5));

  const auto flat = schedule_diagnostics(LearningRateSchedule::constant(0.01), 100'000, 2.0);
  CHECK_FALSE(flat.consistent);
  CHECK(flat.tail_ratio_max == 0.0);

  CHECK_THROWS(schedule_diagnostics(LearningRateSchedule::constant(0.01), 5, 2.0));
}

TEST_CASE("fingerprint") {
  EnsembleConfig a = small_adam(0.1);
  EnsembleConfig b = small_adam(0.1);
  CHECK(a.fingerprint() == b.fingerprint());
  b.seed = 6;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.batch = 2;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.reference = Reference::vf_zero();
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(run_ensemble([&] {
          EnsembleConfig s = a;
          s.n_steps = 10;
          s.replications = 2;
          return s;
        }()).fingerprint.find("steps=10") != std::string::npos);
}
