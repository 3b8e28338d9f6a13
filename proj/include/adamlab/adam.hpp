#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adamlab/model.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

/// Adam iterate together with its moment accumulators. m and v start at 0.
struct AdamState {
  std::size_t n = 0;
  Point theta;
  Point m;
  Point v;

  static AdamState initial(Point theta0) {
    const std::size_t d = theta0.size();
    return AdamState{0, std::move(theta0), Point(d, 0.0), Point(d, 0.0)};
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam step with step size gamma_n:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - gamma_n * mhat / (eps + sqrt(vhat))
/// where mhat = m / (1 - b1^n), vhat = v / (1 - b2^n) and n is the new step
/// count. eps sits outside the root. Throws numeric_error on non-finite input
/// and std::invalid_argument on gamma_n <= 0 or a dimension mismatch.
AdamState adam_step(const AdamState& state, std::span<const double> g,
                    const AdamHyperparams& hp, double gamma_n);
AdamState adam_step(const AdamState& state, const MiniBatchGradient& g,
                    const AdamHyperparams& hp, double gamma_n);

/// theta <- theta - gamma_n g; moments untouched.
AdamState sgd_step(const AdamState& state, std::span<const double> g,
                   double gamma_n);
AdamState sgd_step(const AdamState& state, const MiniBatchGradient& g,
                   double gamma_n);

struct OptimizerKind {
  enum class Tag { adam, sgd };
  Tag tag = Tag::adam;
  AdamHyperparams hp;

  static OptimizerKind adam(const AdamHyperparams& hp) {
    return {Tag::adam, hp};
  }
  static OptimizerKind sgd() { return {Tag::sgd, AdamHyperparams{}}; }
  bool is_adam() const noexcept { return tag == Tag::adam; }
  std::string describe() const;
};

/// Step indices at which a trajectory is recorded: strictly increasing, >= 1,
/// always containing n_steps. Every index up to per_decade is kept, then the
/// spacing becomes geometric with about per_decade points per decade.
std::vector<std::size_t> geometric_grid(std::size_t n_steps,
                                        std::size_t per_decade = 200);

/// a priori bound on |theta_n| for scalar Adam on data bounded by c:
///   c + 3 max{|theta0|, c, g1 (2 + b1) sqrt(b2) / ((1-b1) sqrt(1-b2) (sqrt(b2)-b1))}
/// Throws std::domain_error when sqrt(b2) <= b1.
double trajectory_bound(double theta0, double data_bound,
                        const AdamHyperparams& hp, double gamma1);

struct TrajectoryMeta {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::size_t batch = 1;
  OptimizerKind kind;
  std::string schedule;
};

struct Trajectory {
  std::vector<std::size_t> steps;
  std::vector<Point> thetas;
  AdamState final_state;
  TrajectoryMeta meta;
};

struct TrajectoryOptions {
  /// Abort with numeric_error if any Adam iterate leaves trajectory_bound.
  bool check_bound = true;
};

/// Runs n_steps steps; step n draws M fresh samples, forms the batch-mean
/// gradient at theta_{n-1} and applies the optimizer. theta is recorded at
/// each grid index <= n_steps. Deterministic in the stream state.
/// Throws numeric_error on a non-finite iterate (with the step index).
Trajectory run_trajectory(const QuadraticSOP& sop, const OptimizerKind& kind,
                          const LearningRateSchedule& schedule,
                          std::size_t batch, std::size_t n_steps,
                          const Point& theta0, RandomStream& rng,
                          std::span<const std::size_t> record_grid,
                          const TrajectoryOptions& options = {});

}  // namespace adamlab
