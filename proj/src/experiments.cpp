#include "adamlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "adamlab/errors.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_point(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ";";
    s += fmt(p[i]);
  }
  return s + ")";
}

double error_of(const Point& theta, const Point& ref, ErrorMode mode) {
  if (mode == ErrorMode::signed_distance) return theta[0] - ref[0];
  double ss = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - ref[i];
    ss += d * d;
  }
  const double dist = std::sqrt(ss);
  return mode == ErrorMode::clipped_distance ? std::min(1.0, dist) : dist;
}

void validate(const EnsembleConfig& config) {
  if (config.replications < 2) {
    throw std::invalid_argument("ensemble needs at least 2 replications");
  }
  if (config.n_steps == 0) throw std::invalid_argument("n_steps must be >= 1");
  if (config.batch == 0) throw std::invalid_argument("batch must be >= 1");
  if (config.theta0.size() != config.sop.dim()) {
    throw std::invalid_argument("theta0 dimension does not match the data");
  }
  if (config.error == ErrorMode::signed_distance && config.sop.dim() != 1) {
    throw std::invalid_argument("signed error needs a scalar problem");
  }
}

// Errors of replication r at each grid index into row r of `errors`.
void run_replication(const EnsembleConfig& config,
                     std::span<const std::size_t> grid, const Point& ref,
                     std::size_t r, std::span<double> row) {
  RandomStream rng = make_stream(config.seed, r);
  const Trajectory traj =
      run_trajectory(config.sop, config.kind, config.schedule, config.batch,
                     config.n_steps, config.theta0, rng, grid);
  for (std::size_t k = 0; k < traj.thetas.size(); ++k) {
    row[k] = error_of(traj.thetas[k], ref, config.error);
  }
}

ErrorSeries fold(const EnsembleConfig& config,
                 std::span<const std::size_t> grid, const Point& ref,
                 std::optional<ZeroResult> zero,
                 std::span<const double> errors) {
  ErrorSeries out;
  out.fingerprint = config.fingerprint();
  out.reference = ref;
  out.zero = std::move(zero);
  out.points.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const MeanStderr ms =
        mean_stderr_strided(errors, config.replications, grid.size(), k);
    out.points.push_back({grid[k], ms.mean, ms.std_error});
  }
  return out;
}

}  // namespace

std::vector<std::size_t> EnsembleConfig::resolved_grid() const {
  std::vector<std::size_t> g = grid.empty() ? geometric_grid(n_steps) : grid;
  g.erase(std::remove_if(g.begin(), g.end(),
                         [&](std::size_t n) { return n > n_steps; }),
          g.end());
  return g;
}

std::string EnsembleConfig::fingerprint() const {
  std::string s;
  s += "data=v" + fmt_point(sop.data.v()) + ",w" + fmt_point(sop.data.w()) +
       ",p_v=" + fmt(sop.data.p_v());
  s += " optimizer=" + kind.describe();
  s += " schedule=" + schedule.describe();
  s += " batch=" + std::to_string(batch);
  s += " steps=" + std::to_string(n_steps);
  s += " reps=" + std::to_string(replications);
  s += " theta0=" + fmt_point(theta0);
  s += " seed=" + std::to_string(seed);
  switch (reference.kind) {
    case Reference::Kind::minimizer:
      s += " ref=minimizer";
      break;
    case Reference::Kind::vf_zero:
      s += " ref=vfzero(reps=" + std::to_string(zero.replications) +
           ",tol=" + fmt(zero.abs_tol) + ")";
      break;
    case Reference::Kind::explicit_point:
      s += " ref=" + fmt_point(reference.point);
      break;
  }
  switch (error) {
    case ErrorMode::abs_distance:
      s += " error=abs";
      break;
    case ErrorMode::clipped_distance:
      s += " error=clipped";
      break;
    case ErrorMode::signed_distance:
      s += " error=signed";
      break;
  }
  return s;
}

const SeriesPoint& ErrorSeries::at(std::size_t n) const {
  auto it = std::lower_bound(
      points.begin(), points.end(), n,
      [](const SeriesPoint& p, std::size_t key) { return p.n < key; });
  if (it == points.end() || it->n != n) {
    throw std::out_of_range("step " + std::to_string(n) + " is not on the grid");
  }
  return *it;
}

Point resolve_reference(const EnsembleConfig& config,
                        std::optional<ZeroResult>* zero_out) {
  switch (config.reference.kind) {
    case Reference::Kind::minimizer:
      return minimizer(config.sop);
    case Reference::Kind::explicit_point:
      if (config.reference.point.size() != config.sop.dim()) {
        throw std::invalid_argument("reference point has the wrong dimension");
      }
      return config.reference.point;
    case Reference::Kind::vf_zero: {
      if (config.sop.dim() != 1) {
        throw std::invalid_argument("field-zero reference needs scalar data");
      }
      const AdamHyperparams hp =
          config.kind.is_adam() ? config.kind.hp : AdamHyperparams{};
      ZeroResult z = find_zero_1d(
          config.sop, hp, config.batch, config.zero.policy,
          config.zero.replications, default_bracket(config.sop.data),
          config.zero.abs_tol, derive_seed(config.seed, 0x7A),
          config.zero.options);
      Point ref{z.theta_star};
      if (zero_out) *zero_out = std::move(z);
      return ref;
    }
  }
  return {};
}

ErrorSeries run_ensemble(const EnsembleConfig& config) {
  validate(config);
  std::optional<ZeroResult> zero;
  const Point ref = resolve_reference(config, &zero);
  const std::vector<std::size_t> grid = config.resolved_grid();
  const std::size_t width = grid.size();
  std::vector<double> errors(config.replications * width, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(config.replications);

  // exceptions cannot cross the parallel region; keep the first by index
  std::vector<std::string> failures(config.replications);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto rr = static_cast<std::size_t>(r);
    try {
      run_replication(config, grid, ref, rr,
                      std::span<double>(errors).subspan(rr * width, width));
    } catch (const std::exception& e) {
      failures[rr] = e.what();
    }
  }
  for (std::size_t r = 0; r < config.replications; ++r) {
    if (!failures[r].empty()) {
      throw numeric_error("replication " + std::to_string(r) + ": " +
                          failures[r]);
    }
  }
  return fold(config, grid, ref, std::move(zero), errors);
}

namespace serial {

ErrorSeries run_ensemble(const EnsembleConfig& config) {
  validate(config);
  std::optional<ZeroResult> zero;
  const Point ref = resolve_reference(config, &zero);
  const std::vector<std::size_t> grid = config.resolved_grid();
  const std::size_t width = grid.size();
  std::vector<double> errors(config.replications * width, 0.0);
  for (std::size_t r = 0; r < config.replications; ++r) {
    try {
      run_replication(config, grid, ref, r,
                      std::span<double>(errors).subspan(r * width, width));
    } catch (const std::exception& e) {
      throw numeric_error("replication " + std::to_string(r) + ": " +
                          e.what());
    }
  }
  return fold(config, grid, ref, std::move(zero), errors);
}

}  // namespace serial

RateFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit: x and y differ in length");
  }
  if (x.size() < 2) throw std::invalid_argument("fit: need >= 2 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(std::abs(y[k]) > 0.0) || !std::isfinite(y[k])) {
      throw std::invalid_argument("fit: point " + std::to_string(k) +
                                  " is not positive");
    }
    lx[k] = std::log(x[k]);
    ly[k] = std::log(std::abs(y[k]));
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = lx[k] - mx;
    const double dy = ly[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit: x values coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.count = x.size();
  return fit;
}

RateFit fit_loglog(const ErrorSeries& series, std::size_t n_min,
                   std::size_t n_max) {
  std::vector<double> x;
  std::vector<double> y;
  for (const SeriesPoint& p : series.points) {
    if (p.n < n_min || p.n > n_max) continue;
    if (!(p.mean > 0.0)) {
      throw std::invalid_argument("fit_loglog: nonpositive mean at n = " +
                                  std::to_string(p.n));
    }
    x.push_back(static_cast<double>(p.n));
    y.push_back(p.mean);
  }
  if (x.size() < 5) {
    throw std::invalid_argument("fit_loglog: fewer than 5 points in window");
  }
  RateFit fit = fit_power_law(x, y);
  fit.n_min = n_min;
  fit.n_max = n_max;
  return fit;
}

RateFit fit_loglog(const ErrorSeries& series) {
  if (series.points.empty()) throw std::invalid_argument("empty series");
  const std::size_t n_max = series.points.back().n;
  const auto n_min = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n_max) / std::pow(10.0, 1.5)));
  return fit_loglog(series, std::max<std::size_t>(n_min, 1), n_max);
}

namespace {

SweepRow sweep_row(const EnsembleConfig& cfg, double parameter, double p_v,
                   const SweepOptions& options) {
  SweepRow row;
  row.parameter = parameter;
  row.p_v = p_v;
  if (options.run_ensembles) {
    const ErrorSeries series = run_ensemble(cfg);
    row.final_mean = series.final().mean;
    row.final_std_error = series.final().std_error;
  }
  const AdamHyperparams hp = cfg.kind.hp;
  row.zero = find_zero_1d(cfg.sop, hp, cfg.batch, cfg.zero.policy,
                          cfg.zero.replications,
                          default_bracket(cfg.sop.data), cfg.zero.abs_tol,
                          derive_seed(cfg.seed, 0x7A), cfg.zero.options);
  return row;
}

EnsembleConfig sweep_base(const EnsembleConfig& base, ErrorMode mode) {
  if (!base.kind.is_adam()) {
    throw std::invalid_argument("sweeps need the Adam optimizer");
  }
  if (base.sop.dim() != 1) throw std::invalid_argument("sweeps are scalar");
  EnsembleConfig cfg = base;
  cfg.reference = Reference::at(Point{0.0});
  cfg.error = mode;
  return cfg;
}

}  // namespace

std::vector<SweepRow> sweep_beta2(const EnsembleConfig& base,
                                  std::span<const double> beta2_grid,
                                  const SweepOptions& options) {
  EnsembleConfig cfg = sweep_base(base, ErrorMode::abs_distance);
  cfg.reference = Reference::at(minimizer(cfg.sop));
  const double b1 = base.kind.hp.beta1();
  std::vector<SweepRow> rows;
  for (double b2 : beta2_grid) {
    if (!(b2 > b1 * b1) || !(b2 < 1.0)) {
      std::cerr << "warning: skipping beta2 = " << fmt(b2)
                << " (needs beta1^2 < beta2 < 1)\n";
      continue;
    }
    cfg.kind.hp = AdamHyperparams(b1, b2, base.kind.hp.epsilon());
    rows.push_back(sweep_row(cfg, b2, cfg.sop.data.p_v(), options));
  }
  return rows;
}

std::vector<SweepRow> sweep_batch(const EnsembleConfig& base,
                                  std::span<const std::size_t> batch_grid,
                                  const SweepOptions& options) {
  EnsembleConfig cfg = sweep_base(base, ErrorMode::abs_distance);
  cfg.reference = Reference::at(minimizer(cfg.sop));
  std::vector<SweepRow> rows;
  for (std::size_t m : batch_grid) {
    if (m == 0) throw std::invalid_argument("batch sizes must be >= 1");
    cfg.batch = m;
    rows.push_back(sweep_row(cfg, static_cast<double>(m), cfg.sop.data.p_v(),
                             options));
  }
  return rows;
}

std::vector<SweepRow> sweep_asymmetry(const EnsembleConfig& base,
                                      std::span<const double> w_grid,
                                      const SweepOptions& options) {
  EnsembleConfig cfg = sweep_base(base, ErrorMode::signed_distance);
  std::vector<SweepRow> rows;
  for (double w : w_grid) {
    if (!(w > 0.0)) throw std::invalid_argument("w values must be > 0");
    cfg.sop = QuadraticSOP{two_point_mean_zero(-1.0, w)};
    rows.push_back(sweep_row(cfg, w, cfg.sop.data.p_v(), options));
  }
  return rows;
}

std::vector<double> beta2_grid_default() {
  std::vector<double> g;
  for (int i = 0; i <= 9; ++i) {
    g.push_back(1.0 - std::exp2(-4.0 - 5.0 * i / 9.0));
  }
  return g;
}

std::vector<double> w_grid_default() {
  std::vector<double> g;
  for (int i = -8; i <= 7; ++i) g.push_back(std::ldexp(1.0, i));
  return g;
}

ScheduleReport schedule_diagnostics(const LearningRateSchedule& schedule,
                                    std::size_t n_max, double p) {
  if (n_max < 10) throw std::invalid_argument("n_max must be >= 10");
  if (!(p > 0.0)) throw std::invalid_argument("p must be > 0");
  ScheduleReport rep;
  rep.n_max = n_max;
  rep.p = p;

  auto ratio = [&](std::size_t n) {
    const double g = schedule(n);
    return schedule.decrement(n) / (g * g);
  };
  // ratio on up to 1001 evenly spaced points of [n_max/2, n_max]
  const std::size_t lo = n_max / 2;
  const std::size_t samples = std::min<std::size_t>(1001, n_max - lo + 1);
  double first = 0.0;
  double prev = 0.0;
  bool non_increasing = true;
  rep.tail_ratio_max = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t n =
        lo + (n_max - lo) * s / std::max<std::size_t>(samples - 1, 1);
    const double q = ratio(n);
    rep.tail_ratio_max = std::max(rep.tail_ratio_max, q);
    if (s == 0) first = q;
    if (s > 0 && q > prev) non_increasing = false;
    prev = q;
  }
  rep.tail_ratio_end = prev;
  rep.ratio_decreasing = non_increasing && prev < first;

  const std::size_t decade_start = n_max / 10;
  double sum_p = 0.0;
  double sum_p_before = 0.0;
  double sum_1 = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double g = schedule(n);
    sum_p += std::pow(g, p);
    sum_1 += g;
    if (n == decade_start) sum_p_before = sum_p;
  }
  rep.partial_sum_p = sum_p;
  rep.partial_sum_p_increment = (sum_p - sum_p_before) / sum_p;
  rep.divergence_proxy = sum_1;

  const bool summable = rep.partial_sum_p_increment < 1e-3;
  const bool decaying = rep.ratio_decreasing && rep.tail_ratio_end < 1.0;
  rep.consistent = summable && decaying;
  const std::string horizon = " at horizon " + std::to_string(n_max);
  if (rep.consistent) {
    rep.verdict = "step-size conditions consistent" + horizon;
    if (rep.tail_ratio_end > 1e-2) {
      rep.verdict += " (ratio decays slowly: " + fmt(rep.tail_ratio_end) + ")";
    }
  } else if (!decaying && !summable) {
    rep.verdict = "fails: ratio does not decay and sum of gamma^p grows" +
                  horizon;
  } else if (!decaying) {
    rep.verdict = "fails: gamma_n^-2 (gamma_n - gamma_{n+1}) does not decay" +
                  horizon;
  } else {
    rep.verdict = "fails: sum of gamma^p is not summable" + horizon;
  }
  return rep;
}

}  // namespace adamlab
