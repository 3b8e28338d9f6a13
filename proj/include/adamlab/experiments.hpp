#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adamlab/adam.hpp"
#include "adamlab/model.hpp"
#include "adamlab/vectorfield.hpp"

namespace adamlab {

struct Reference {
  enum class Kind { minimizer, vf_zero, explicit_point };
  Kind kind = Kind::minimizer;
  Point point;  // used by explicit_point

  static Reference minimizer() { return {Kind::minimizer, {}}; }
  static Reference vf_zero() { return {Kind::vf_zero, {}}; }
  static Reference at(Point p) { return {Kind::explicit_point, std::move(p)}; }
};

enum class ErrorMode {
  abs_distance,      // ||theta_n - ref||
  clipped_distance,  // min{1, ||theta_n - ref||}
  signed_distance,   // theta_n - ref, scalar problems only
};

/// Settings for resolving a vector-field zero as the reference point.
struct ZeroSearchConfig {
  TruncationPolicy policy;
  std::size_t replications = 100'000;
  double abs_tol = 1e-7;
  ZeroSearchOptions options;
};

struct EnsembleConfig {
  QuadraticSOP sop{two_point_mean_zero(-1.0, 0.1)};
  OptimizerKind kind = OptimizerKind::adam(AdamHyperparams{});
  LearningRateSchedule schedule = LearningRateSchedule::power_law(1.0, 0.99);
  std::size_t batch = 1;
  std::size_t n_steps = 400'000;
  std::size_t replications = 100;
  Point theta0{1.0};
  /// Empty means geometric_grid(n_steps).
  std::vector<std::size_t> grid;
  std::uint64_t seed = 1;
  Reference reference = Reference::minimizer();
  ErrorMode error = ErrorMode::abs_distance;
  ZeroSearchConfig zero;

  std::vector<std::size_t> resolved_grid() const;
  std::string fingerprint() const;
};

struct SeriesPoint {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct ErrorSeries {
  std::vector<SeriesPoint> points;
  std::string fingerprint;
  Point reference;
  std::optional<ZeroResult> zero;  // set when the reference is a field zero

  const SeriesPoint& at(std::size_t n) const;  // throws if n is not on the grid
  const SeriesPoint& final() const { return points.back(); }
};

/// Point of the reference, resolving field zeros through find_zero_1d with
/// the config's optimizer hyperparameters and batch size.
Point resolve_reference(const EnsembleConfig& config,
                        std::optional<ZeroResult>* zero_out = nullptr);

/// R independent trajectories (stream id = replication index, OpenMP over
/// replications), error statistics per grid step folded in replication order.
ErrorSeries run_ensemble(const EnsembleConfig& config);

namespace serial {
/// Single-threaded reference for run_ensemble; bit-identical output.
ErrorSeries run_ensemble(const EnsembleConfig& config);
}  // namespace serial

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
  std::size_t count = 0;
};

/// OLS of log(mean) on log(n) over grid points with n_min <= n <= n_max.
/// Throws std::invalid_argument on fewer than 5 points or a mean <= 0.
RateFit fit_loglog(const ErrorSeries& series, std::size_t n_min,
                   std::size_t n_max);

/// Default window: the last 1.5 decades of the series.
RateFit fit_loglog(const ErrorSeries& series);

/// OLS of log|y| on log x (x > 0, y != 0), at least 2 points.
RateFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct SweepRow {
  double parameter = 0.0;  // beta2, M, or w
  double p_v = 0.0;
  double final_mean = 0.0;
  double final_std_error = 0.0;
  ZeroResult zero;
};

struct SweepOptions {
  /// When false only the field zeros are computed (final_mean stays 0).
  bool run_ensembles = true;
};

/// Rows for each beta2 (entries with beta2 <= beta1^2 are skipped with a
/// warning on stderr). final_mean is E|theta_n| at n_steps.
std::vector<SweepRow> sweep_beta2(const EnsembleConfig& base,
                                  std::span<const double> beta2_grid,
                                  const SweepOptions& options = {});

std::vector<SweepRow> sweep_batch(const EnsembleConfig& base,
                                  std::span<const std::size_t> batch_grid,
                                  const SweepOptions& options = {});

/// v = -1, w from the grid, p_v = w / (1 + w); final_mean is the signed
/// E[theta_n] at n_steps.
std::vector<SweepRow> sweep_asymmetry(const EnsembleConfig& base,
                                      std::span<const double> w_grid,
                                      const SweepOptions& options = {});

/// {1 - 2^(-4 - 5 i / 9) : i = 0..9}
std::vector<double> beta2_grid_default();
/// {2^i : i = -8..7}
std::vector<double> w_grid_default();

struct ScheduleReport {
  std::size_t n_max = 0;
  double p = 0.0;
  /// max over n in [n_max/2, n_max] of gamma_n^-2 (gamma_n - gamma_{n+1})
  double tail_ratio_max = 0.0;
  /// the same ratio at n_max
  double tail_ratio_end = 0.0;
  /// ratio non-increasing on the sampled tail with end < start
  bool ratio_decreasing = false;
  double partial_sum_p = 0.0;           // sum_{n <= n_max} gamma_n^p
  double partial_sum_p_increment = 0.0; // relative growth over the last decade
  double divergence_proxy = 0.0;        // sum_{n <= n_max} gamma_n
  bool consistent = false;
  std::string verdict;
};

/// Finite-horizon proxies for the step-size conditions: summable gamma^p and
/// gamma_n^-2 (gamma_n - gamma_{n+1}) -> 0. Requires n_max >= 10.
ScheduleReport schedule_diagnostics(const LearningRateSchedule& schedule,
                                    std::size_t n_max, double p);

}  // namespace adamlab
