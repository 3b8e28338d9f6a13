#include "adamlab/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>

#include "adamlab/adam.hpp"
#include "adamlab/commands.hpp"
#include "adamlab/config.hpp"
#include "adamlab/experiments.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

namespace {

class Checker {
 public:
  explicit Checker(std::string name) { result_.name = std::move(name); }

  bool expect(bool ok, const std::string& what) {
    if (!ok && result_.failure.empty()) result_.failure = what;
    return ok;
  }

  template <class F>
  SuiteResult run(F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(*this);
    } catch (const std::exception& e) {
      expect(false, std::string("exception: ") + e.what());
    }
    result_.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    result_.passed = result_.failure.empty();
    return result_;
  }

 private:
  SuiteResult result_;
};

std::string g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double uniform_in(RandomStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

}  // namespace

VFEstimatorFn default_vf_estimator() {
  return [](const QuadraticSOP& sop, std::span<const double> theta,
            const AdamHyperparams& hp, std::size_t batch,
            const TruncationPolicy& policy, std::size_t reps,
            std::uint64_t seed) {
    return estimate_vf(sop, theta, hp, batch, policy, reps, seed);
  };
}

SuiteResult oracle_equivalence_suite(const VFEstimatorFn& estimator,
                                     std::uint64_t seed) {
  return Checker("oracle-equivalence").run([&](Checker& c) {
    RandomStream rng = make_stream(seed, 0);
    for (int k = 0; k < 20; ++k) {
      const double b1 = uniform_in(rng, 0.5, 0.95);
      const double b2 = uniform_in(rng, b1 * b1 + 0.01, 0.999);
      const AdamHyperparams hp(b1, b2, 1e-8);
      const double v = uniform_in(rng, -2.0, -0.2);
      const double w = uniform_in(rng, 0.1, 2.0);
      const QuadraticSOP sop{two_point_mean_zero(v, w)};
      const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 2.0);
      TruncationPolicy policy;
      policy.fixed_terms = static_cast<std::size_t>(rng.uniform() * 7.0);
      const double theta = uniform_in(rng, -1.0, 1.0);
      const double th[1] = {theta};
      const VFEstimate e = estimator(sop, th, hp, m, policy, 20'000,
                                     derive_seed(seed, static_cast<std::uint64_t>(k)));
      const double exact =
          vf_truncated_exact(sop.data, theta, hp, m, *policy.fixed_terms);
      const double dev = std::abs(e.value[0] - exact);
      c.expect(dev <= 4.0 * e.std_error[0] + 1e-12,
               "config " + std::to_string(k) + ": |estimate - exact| = " +
                   g(dev) + " > 4 stderr = " + g(4.0 * e.std_error[0]));
    }
    // point mass: every path equals the closed form up to the series tail
    for (double x0 : {0.0, 0.7, -1.3}) {
      const QuadraticSOP sop{TwoPointDistribution::point_mass(Point{x0})};
      const AdamHyperparams hp(0.9, 0.99, 1e-8);
      const double th[1] = {0.25};
      const VFEstimate e = estimator(sop, th, hp, 1, TruncationPolicy{}, 4, seed);
      const double closed = vf_deterministic(Point{x0}, th, hp)[0];
      c.expect(std::abs(e.value[0] - closed) <= 1e-12,
               "point mass at " + g(x0) + ": " + g(e.value[0]) + " vs " +
                   g(closed));
    }
  });
}

SuiteResult half_concavity_suite() {
  return Checker("half-concavity").run([&](Checker& c) {
    struct Triple {
      double c, kappa, eps;
    };
    const Triple triples[] = {{1.0, 1.0, 1e-2},  {0.5, 0.1, 1e-3},
                              {2.0, 3.0, 0.1},   {1e-2, 1.0, 1e-2},
                              {0.0, 1.0, 0.5},   {5.0, 0.2, 1.0}};
    std::vector<double> grid;
    for (int i = 0; i < 25; ++i) {
      const double x = 0.05 * std::pow(10.0, i / 10.0);
      grid.push_back(x);
      grid.push_back(-x);
    }
    for (const auto& t : triples) {
      const HalfConcavityReport r = half_concavity_probe(t.c, t.kappa, t.eps, grid);
      const std::string tag =
          "(c, kappa, eps) = (" + g(t.c) + ", " + g(t.kappa) + ", " + g(t.eps) + ")";
      c.expect(r.oddness_defect == 0.0, tag + ": not odd");
      c.expect(r.increasing, tag + ": not increasing");
      c.expect(r.concave_on_positive, tag + ": not concave on x > 0");
    }
  });
}

SuiteResult paired_oddness_suite(std::uint64_t seed) {
  return Checker("paired-oddness").run([&](Checker& c) {
    const AdamHyperparams hp(0.9, 0.99, 1e-8);
    for (std::size_t m : {1u, 2u}) {
      for (auto est : {VFEstimator::plain, VFEstimator::conditioned}) {
        const VFPathSet paths(TwoPointDistribution::scalar(-1.0, 1.0, 0.5), m, hp,
                              TruncationPolicy{}, 2'000, seed);
        for (double x : {0.01, 0.3, 1.7}) {
          const double pos[1] = {x};
          const double neg[1] = {-x};
          const double a = paths.evaluate_paired(pos, est).value[0];
          const double b = paths.evaluate_paired(neg, est).value[0];
          c.expect(a == -b, "M = " + std::to_string(m) + ", theta = " + g(x) +
                                ": paired(theta) + paired(-theta) = " + g(a + b));
        }
        const double zero[1] = {0.0};
        c.expect(paths.evaluate_paired(zero, est).value[0] == 0.0,
                 "paired estimate at 0 is not 0");
      }
    }
  });
}

SuiteResult boundedness_suite(std::uint64_t seed) {
  return Checker("boundedness").run([&](Checker& c) {
    struct Case {
      double b1, b2, w, theta0;
      std::size_t m;
    };
    const Case cases[] = {{0.9, 0.999, 0.1, 1.0, 1},  {0.9, 0.9, 1.0, -3.0, 1},
                          {0.6, 0.99, 2.0, 0.0, 2},   {0.9, 0.99, 0.1, 5.0, 3},
                          {0.5, 0.3, 0.5, 10.0, 1}};
    const std::size_t n = 5'000;
    std::vector<std::size_t> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = k + 1;
    for (const auto& cs : cases) {
      const AdamHyperparams hp(cs.b1, cs.b2, 1e-8);
      const QuadraticSOP sop{two_point_mean_zero(-1.0, cs.w)};
      const auto sched = LearningRateSchedule::power_law(1.0, 0.99);
      const double bound = trajectory_bound(cs.theta0, sop.data.bound(), hp, sched(1));
      for (std::uint64_t r = 0; r < 4; ++r) {
        RandomStream rng = make_stream(seed, r);
        const Trajectory tr = run_trajectory(sop, OptimizerKind::adam(hp), sched,
                                             cs.m, n, Point{cs.theta0}, rng, grid);
        double worst = 0.0;
        for (const auto& th : tr.thetas) worst = std::max(worst, std::abs(th[0]));
        c.expect(worst <= bound, "beta = (" + g(cs.b1) + ", " + g(cs.b2) +
                                     "): max |theta| = " + g(worst) +
                                     " > bound " + g(bound));
      }
    }
  });
}

SuiteResult bias_correction_suite() {
  return Checker("bias-correction").run([&](Checker& c) {
    for (double b1 : {0.5, 0.9, 0.99}) {
      for (double b2 : {0.999, 0.9999}) {
        const AdamHyperparams hp(b1, b2, 1e-8);
        for (double grad : {-3.0, -1e-3, 0.5, 40.0}) {
          const double gamma = 0.1;
          const AdamState s0 = AdamState::initial(Point{0.7});
          const double gv[1] = {grad};
          const AdamState s1 = adam_step(s0, gv, hp, gamma);
          const double expect_theta = 0.7 - gamma * grad / (1e-8 + std::abs(grad));
          c.expect(std::abs(s1.theta[0] - expect_theta) <= 1e-14,
                   "first step theta " + g(s1.theta[0]) + " vs " + g(expect_theta));
          c.expect(std::abs(s1.m[0] - (1 - b1) * grad) <= 1e-15 * std::abs(grad),
                   "first step m");
          c.expect(std::abs(s1.v[0] - (1 - b2) * grad * grad) <=
                       1e-15 * grad * grad,
                   "first step v");
        }
      }
    }
  });
}

SuiteResult schedule_suite() {
  return Checker("schedule-diagnostics").run([&](Checker& c) {
    const std::size_t n_max = 1'000'000;
    const auto good = schedule_diagnostics(
        LearningRateSchedule::power_law(1.0, 0.99), n_max, 2.0);
    c.expect(good.consistent, "r = 0.99 not consistent: " + good.verdict);
    const auto harmonic = schedule_diagnostics(
        LearningRateSchedule::power_law(1.0, 1.0), n_max, 2.0);
    c.expect(!harmonic.consistent, "r = 1 classified consistent");
    const auto flat =
        schedule_diagnostics(LearningRateSchedule::constant(1e-3), n_max, 2.0);
    c.expect(!flat.consistent, "constant schedule classified consistent");
  });
}

SuiteResult deterministic_zero_suite() {
  return Checker("deterministic-zero").run([&](Checker& c) {
    const AdamHyperparams hp(0.9, 0.999, 1e-8);
    for (double x0 : {0.3, -1.2, 0.0}) {
      const QuadraticSOP sop{TwoPointDistribution::point_mass(Point{x0})};
      const ZeroResult z = find_zero_1d(sop, hp, 1, TruncationPolicy{}, 2,
                                        {x0 - 2.0, x0 + 1.5}, 1e-10, 5);
      c.expect(std::abs(z.theta_star - x0) <= 1e-9,
               "point mass at " + g(x0) + ": zero " + g(z.theta_star));
      const double th[1] = {x0 + 0.5};
      const double f = vf_deterministic(Point{x0}, th, hp)[0];
      c.expect(std::abs(f + 1.0 / (1.0 + 1e-8)) <= 1e-15,
               "closed form at x0 + 0.5: " + g(f));
    }
  });
}

SuiteResult seed_determinism_suite() {
  return Checker("seed-determinism").run([&](Checker& c) {
    const KeyValues small{
        {"beta2", "0.99"},          {"steps", "2000"},
        {"reps", "4"},              {"vf-reps", "2000"},
        {"zero-tol", "1e-5"},       {"ref", "vfzero"},
        {"theta", "-0.5,0.5"},      {"beta2-grid", "0.95,0.99"},
        {"batch-grid", "1,2"},      {"w-grid", "0.5,2"},
        {"n-max", "1000"},          {"per-decade", "20"},
    };
    const Command commands[] = {Command::run,         Command::ensemble,
                                Command::vf_eval,     Command::vf_zero,
                                Command::sweep_beta2, Command::sweep_batch,
                                Command::sweep_asym,  Command::check_schedule};
    for (Command cmd : commands) {
      const std::string name(command_name(cmd));
      const RunConfig cfg = resolve_config(cmd, {}, small);
      set_thread_count(1);
      const std::string a = execute(cfg).to_csv();
      set_thread_count(3);
      const std::string b = execute(cfg).to_csv();
      set_thread_count(0);
      c.expect(a == b, name + ": output differs between reruns");
      if (cmd != Command::check_schedule) {
        KeyValues other = small;
        other["seed"] = "2";
        const std::string d = execute(resolve_config(cmd, {}, other)).to_csv();
        c.expect(a != d, name + ": seed has no effect");
      }
    }
  });
}

std::vector<SuiteResult> run_selftest(const SelftestOptions& options) {
  std::vector<SuiteResult> out;
  out.push_back(oracle_equivalence_suite(options.estimator, options.seed));
  out.push_back(half_concavity_suite());
  out.push_back(paired_oddness_suite(options.seed));
  out.push_back(boundedness_suite(options.seed));
  out.push_back(bias_correction_suite());
  out.push_back(schedule_suite());
  out.push_back(deterministic_zero_suite());
  out.push_back(seed_determinism_suite());
  return out;
}

std::string format_report(const std::vector<SuiteResult>& results,
                          bool with_times) {
  std::string s;
  char line[256];
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (with_times) {
      std::snprintf(line, sizeof line, "%-22s %s %8.2fs\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", r.seconds);
    } else {
      std::snprintf(line, sizeof line, "%-22s %s\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL");
    }
    s += line;
    if (!r.passed) {
      s += "    " + r.failure + "\n";
      ++failed;
    }
  }
  s += std::to_string(results.size() - failed) + "/" +
       std::to_string(results.size()) + " suites passed\n";
  return s;
}

}  // namespace adamlab
