#include <cmath>
#include <vector>

#include "adamlab/experiments.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/vectorfield.hpp"
#include "doctest.h"

using namespace adamlab;

namespace {

struct ThreadGuard {
  ~ThreadGuard() { set_thread_count(0); }
};

EnsembleConfig ensemble_config() {
  EnsembleConfig c;
  c.sop = QuadraticSOP{two_point_mean_zero(-1.0, 0.2)};
  c.kind = OptimizerKind::adam(AdamHyperparams(0.9, 0.95, 1e-8));
  c.batch = 2;
  c.n_steps = 3000;
  c.replications = 13;
  c.seed = 31;
  return c;
}

}  // namespace

TEST_CASE("mean_stderr") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const MeanStderr m = mean_stderr(x);
  CHECK(m.mean == 2.5);
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)).epsilon(1e-15));
  CHECK(mean_stderr(std::vector<double>{7.0}).std_error == 0.0);
  CHECK(mean_stderr(std::vector<double>(5, 0.1)).std_error == 0.0);
  CHECK(mean_stderr(std::vector<double>(5, 0.1)).mean == 0.1);
  CHECK(mean_stderr(std::vector<double>{}).mean == 0.0);

  // column 1 of a 3-wide row-major block
  const std::vector<double> block{0, 1, 0, 0, 3, 0, 0, 5, 0};
  const MeanStderr c = mean_stderr_strided(block, 3, 3, 1);
  CHECK(c.mean == 3.0);
  CHECK(c.std_error == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("thread count override") {
  ThreadGuard guard;
  set_thread_count(3);
  CHECK(thread_count() == 3);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}

TEST_CASE("ensemble: OpenMP kernel equals the serial reference") {
  ThreadGuard guard;
  for (ErrorMode mode : {ErrorMode::abs_distance, ErrorMode::signed_distance,
                         ErrorMode::clipped_distance}) {
    EnsembleConfig c = ensemble_config();
    c.error = mode;
    const ErrorSeries ref = serial::run_ensemble(c);
    for (int threads : {1, 2, 5}) {
      set_thread_count(threads);
      const ErrorSeries par = run_ensemble(c);
      REQUIRE(par.points.size() == ref.points.size());
      for (std::size_t k = 0; k < ref.points.size(); ++k) {
        REQUIRE(par.points[k].n == ref.points[k].n);
        REQUIRE(par.points[k].mean == ref.points[k].mean);
        REQUIRE(par.points[k].std_error == ref.points[k].std_error);
      }
    }
  }
}

TEST_CASE("vector field: thread count does not change the estimate") {
  ThreadGuard guard;
  const QuadraticSOP sop{two_point_mean_zero(-1.0, 0.1)};
  const AdamHyperparams hp(0.9, 0.99, 1e-8);
  const double th[1] = {0.01};
  for (auto est : {VFEstimator::plain, VFEstimator::conditioned}) {
    set_thread_count(1);
    const VFEstimate a = estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 3000, 8, est);
    set_thread_count(4);
    const VFEstimate b = estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 3000, 8, est);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
  }
  // the serial conditioned path is quadratic in N; compared in the field tests
  const VFEstimate s = serial::estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 3000, 8);
  CHECK(s.value[0] == doctest::Approx(estimate_vf(sop, th, hp, 2, TruncationPolicy{}, 3000, 8).value[0]).epsilon(1e-12));

  set_thread_count(1);
  const ZeroResult z1 = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 2000,
                                     default_bracket(sop.data), 1e-6, 4);
  set_thread_count(3);
  const ZeroResult z3 = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 2000,
                                     default_bracket(sop.data), 1e-6, 4);
  CHECK(z1.theta_star == z3.theta_star);
  CHECK(z1.residual.value == z3.residual.value);
}
