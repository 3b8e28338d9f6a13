#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adamlab/model.hpp"

namespace adamlab {

// The Adam vector field at a frozen theta:
//
//   f_i(theta) = -(1 - b1) E[ sum_n b1^n G_{n,i}
//                              / (eps + sqrt((1 - b2) sum_n b2^n G_{n,i}^2)) ]
//
// with G_n the batch-mean gradient of an i.i.d. batch sequence. The sign is
// that of the Adam increment (negative gradient), so f is a drift: positive
// below its zero and negative above it.

/// How many terms of the geometric series are kept.
struct TruncationPolicy {
  double tol = 1e-12;
  /// Overrides the tolerance rule with an explicit N (series run n = 0..N).
  std::optional<std::size_t> fixed_terms;

  /// Smallest N >= 1 with max(b1, b2)^(N+1) < tol.
  std::size_t terms(const AdamHyperparams& hp) const;

  /// Numerator length for the conditioned estimator: smallest N1 <= N with
  ///   (1 - b1) / sqrt(1 - b2) * r^(N1+1) / (1 - r) < tol,  r = b1 / sqrt(b2),
  /// which bounds every dropped numerator term since each ratio
  /// |G_n| / sqrt((1 - b2) sum_k b2^k G_k^2) is at most b2^(-n/2) / sqrt(1-b2).
  std::size_t numerator_terms(const AdamHyperparams& hp) const;
};

struct VFEstimate {
  Point value;
  /// Per-coordinate standard error of the replication mean (0 when R < 2).
  Point std_error;
  std::size_t truncation_N = 0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

enum class VFEstimator {
  /// The ratio evaluated on each sampled path.
  plain,
  /// For each n, the expectation over the n-th batch is taken exactly given
  /// the rest of the path (binomial sum over the M + 1 batch outcomes).
  /// Same mean as plain, much smaller variance near the zero.
  conditioned,
};

/// Frozen sample paths for common-random-number evaluation of the field.
///
/// Replication r draws from make_stream(seed, r): for n = 0..N, M uniforms,
/// each u < p_v counting one v in batch n. A path is kept as its per-outcome
/// weight sums A_j = sum_{n: c_n = j} b2^n and B_j = sum_{n: c_n = j} b1^n,
/// which are theta-independent; the first N1 + 1 counts are redrawn from the
/// stream when the conditioned estimator needs them.
class VFPathSet {
 public:
  VFPathSet(TwoPointDistribution data, std::size_t batch,
            const AdamHyperparams& hp, const TruncationPolicy& policy,
            std::size_t replications, std::uint64_t seed);

  VFEstimate evaluate(std::span<const double> theta,
                      VFEstimator estimator = VFEstimator::plain) const;

  /// Antithetic estimate for symmetric data with mean mu:
  ///   (1/R) sum_r (Z_r(theta) - Z_r(2 mu - theta)) / 2.
  /// For symmetric data Z_r(2 mu - theta) is minus the value on the path with
  /// every draw reflected, so this averages each path with its mirror image.
  /// For mu = 0 it is exactly odd in theta. Throws unless data.symmetric().
  VFEstimate evaluate_paired(std::span<const double> theta,
                             VFEstimator estimator = VFEstimator::plain) const;

  /// The same paths with every draw reflected (v <-> w).
  VFPathSet mirrored() const;

  /// Per-replication values Z_r (row r, column i), before averaging.
  std::vector<double> replicate_values(std::span<const double> theta,
                                       VFEstimator estimator) const;

  const TwoPointDistribution& data() const noexcept { return data_; }
  std::size_t batch() const noexcept { return batch_; }
  std::size_t replications() const noexcept { return replications_; }
  std::size_t terms() const noexcept { return terms_; }
  std::size_t numerator_terms() const noexcept { return head_terms_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  VFPathSet() = default;
  VFEstimate summarize(std::span<const double> z, std::size_t d) const;

  TwoPointDistribution data_{Point{0.0}, Point{0.0}, 1.0};
  std::size_t batch_ = 1;
  AdamHyperparams hp_;
  std::size_t terms_ = 0;
  std::size_t head_terms_ = 0;
  std::size_t replications_ = 0;
  std::uint64_t seed_ = 0;
  bool reflected_ = false;
  std::vector<double> a_;  // R x (M + 1)
  std::vector<double> b_;  // R x (M + 1)
  std::vector<double> outcome_prob_;  // binomial weights, j = number of v's
};

/// Monte Carlo estimate of f at theta (OpenMP kernel on a fresh path set).
VFEstimate estimate_vf(const QuadraticSOP& sop, std::span<const double> theta,
                       const AdamHyperparams& hp, std::size_t batch,
                       const TruncationPolicy& policy,
                       std::size_t replications, std::uint64_t seed,
                       VFEstimator estimator = VFEstimator::plain);

namespace serial {

/// Reference implementation: draws each path and evaluates the series
/// directly, term by term. Same streams as the kernel.
VFEstimate estimate_vf(const QuadraticSOP& sop, std::span<const double> theta,
                       const AdamHyperparams& hp, std::size_t batch,
                       const TruncationPolicy& policy,
                       std::size_t replications, std::uint64_t seed,
                       VFEstimator estimator = VFEstimator::plain);

}  // namespace serial

/// Point-mass data at x0: f_i = -g_i / (eps + |g_i|), g = 2 (theta - x0).
Point vf_deterministic(std::span<const double> x0,
                       std::span<const double> theta,
                       const AdamHyperparams& hp);

/// Exact N-truncated expectation for scalar two-point data, by enumerating
/// all (M + 1)^(N + 1) batch-count sequences with binomial weights.
/// Throws std::invalid_argument when that count exceeds max_paths.
double vf_truncated_exact(const TwoPointDistribution& data, double theta,
                          const AdamHyperparams& hp, std::size_t batch,
                          std::size_t n_terms,
                          std::size_t max_paths = 2'000'000);

struct ZeroResult {
  double theta_star = 0.0;
  std::pair<double, double> bracket;  // final bisection interval
  VFEstimate residual;                // fresh randomness at theta_star
  std::size_t iterations = 0;
  bool monotonicity_verified = false;
  /// Central-difference slope of the frozen estimate at theta_star.
  double slope = 0.0;
  /// abs_tol + 3 * residual stderr / |slope|
  double uncertainty = 0.0;
};

struct ZeroSearchOptions {
  VFEstimator estimator = VFEstimator::conditioned;
  std::size_t monotonicity_grid = 17;
  double confidence_sigmas = 4.0;
};

/// Default bracket for scalar two-point data: +-(|v| + |w|), widened to keep
/// the mean strictly inside.
std::pair<double, double> default_bracket(const TwoPointDistribution& data);

/// Zero of the scalar field by bisection on one frozen path set.
/// Requires f(lo) - k se > 0 and f(hi) + k se < 0 (k = confidence_sigmas),
/// else throws bracket_error. If the frozen estimate is not non-increasing on
/// the monotonicity grid, the search is restricted to its first sign change
/// and monotonicity_verified is false.
ZeroResult find_zero_1d(const QuadraticSOP& sop, const AdamHyperparams& hp,
                        std::size_t batch, const TruncationPolicy& policy,
                        std::size_t replications,
                        std::pair<double, double> bracket, double abs_tol,
                        std::uint64_t seed,
                        const ZeroSearchOptions& options = {});

/// h(x) = x / (eps + sqrt(c + kappa x^2)) checked on a grid of nonzero points.
struct HalfConcavityReport {
  double oddness_defect = 0.0;    // max |h(x) + h(-x)|
  double min_derivative = 0.0;    // min central-difference h' on the grid
  double max_second_derivative_positive = 0.0;  // max h'' over grid x > 0
  bool increasing = false;
  bool concave_on_positive = false;
};

double half_concave_map(double x, double c, double kappa, double eps);

HalfConcavityReport half_concavity_probe(double c, double kappa, double eps,
                                         std::span<const double> grid,
                                         double step = 1e-4);

}  // namespace adamlab
