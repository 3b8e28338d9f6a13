#include "adamlab/adam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "adamlab/errors.hpp"

namespace adamlab {

namespace {

void check_step_inputs(const AdamState& state, std::span<const double> g,
                       double gamma_n) {
  if (!(gamma_n > 0.0)) {
    throw std::invalid_argument("step size must be positive");
  }
  if (!std::isfinite(gamma_n)) {
    throw numeric_error("non-finite step size");
  }
  if (g.size() != state.theta.size()) {
    throw std::invalid_argument("gradient dimension does not match theta");
  }
  for (double x : g) {
    if (!std::isfinite(x)) throw numeric_error("non-finite gradient");
  }
  for (double x : state.theta) {
    if (!std::isfinite(x)) throw numeric_error("non-finite iterate");
  }
}

// In-place update shared by adam_step and run_trajectory so both follow the
// exact same floating-point path. n is the new step count (>= 1).
inline void adam_update(std::span<double> theta, std::span<double> m,
                        std::span<double> v, std::span<const double> g,
                        std::size_t n, const AdamHyperparams& hp,
                        double gamma_n) {
  const double b1 = hp.beta1();
  const double b2 = hp.beta2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(n));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(n));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    theta[i] -= gamma_n * m_hat / (hp.epsilon() + std::sqrt(v_hat));
  }
}

inline void sgd_update(std::span<double> theta, std::span<const double> g,
                       double gamma_n) {
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= gamma_n * g[i];
}

}  // namespace

AdamState adam_step(const AdamState& state, std::span<const double> g,
                    const AdamHyperparams& hp, double gamma_n) {
  check_step_inputs(state, g, gamma_n);
  AdamState next = state;
  next.n = state.n + 1;
  adam_update(next.theta, next.m, next.v, g, next.n, hp, gamma_n);
  return next;
}

AdamState adam_step(const AdamState& state, const MiniBatchGradient& g,
                    const AdamHyperparams& hp, double gamma_n) {
  return adam_step(state, std::span<const double>(g.value), hp, gamma_n);
}

AdamState sgd_step(const AdamState& state, std::span<const double> g,
                   double gamma_n) {
  check_step_inputs(state, g, gamma_n);
  AdamState next = state;
  next.n = state.n + 1;
  sgd_update(next.theta, g, gamma_n);
  return next;
}

AdamState sgd_step(const AdamState& state, const MiniBatchGradient& g,
                   double gamma_n) {
  return sgd_step(state, std::span<const double>(g.value), gamma_n);
}

std::string OptimizerKind::describe() const {
  if (tag == Tag::sgd) return "sgd";
  char buf[96];
  std::snprintf(buf, sizeof buf, "adam(beta1=%.17g,beta2=%.17g,eps=%.17g)",
                hp.beta1(), hp.beta2(), hp.epsilon());
  return buf;
}

std::vector<std::size_t> geometric_grid(std::size_t n_steps,
                                        std::size_t per_decade) {
  if (n_steps == 0) throw std::invalid_argument("grid needs n_steps >= 1");
  if (per_decade == 0) per_decade = 1;
  std::vector<std::size_t> grid;
  // exponents k / per_decade, so exact powers of ten land on the grid
  std::size_t last = 0;
  for (std::size_t k = 0;; ++k) {
    const double e = static_cast<double>(k) / static_cast<double>(per_decade);
    const auto n = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
    if (n >= n_steps) break;
    if (n > last) {
      grid.push_back(n);
      last = n;
    }
  }
  grid.push_back(n_steps);
  return grid;
}

double trajectory_bound(double theta0, double data_bound,
                        const AdamHyperparams& hp, double gamma1) {
  const double b1 = hp.beta1();
  const double b2 = hp.beta2();
  const double root_b2 = std::sqrt(b2);
  if (!(root_b2 > b1)) {
    throw std::domain_error("trajectory bound needs sqrt(beta2) > beta1");
  }
  if (!(data_bound >= 0.0) || !(gamma1 > 0.0)) {
    throw std::invalid_argument("trajectory bound needs c >= 0, gamma1 > 0");
  }
  const double drift = gamma1 * (2.0 + b1) * root_b2 /
                       ((1.0 - b1) * std::sqrt(1.0 - b2) * (root_b2 - b1));
  return data_bound + 3.0 * std::max({std::abs(theta0), data_bound, drift});
}

Trajectory run_trajectory(const QuadraticSOP& sop, const OptimizerKind& kind,
                          const LearningRateSchedule& schedule,
                          std::size_t batch, std::size_t n_steps,
                          const Point& theta0, RandomStream& rng,
                          std::span<const std::size_t> record_grid,
                          const TrajectoryOptions& options) {
  if (n_steps == 0) throw std::invalid_argument("n_steps must be >= 1");
  if (batch == 0) throw std::invalid_argument("batch size must be >= 1");
  const std::size_t d = sop.dim();
  if (theta0.size() != d) {
    throw std::invalid_argument("theta0 dimension does not match the data");
  }
  for (std::size_t k = 1; k < record_grid.size(); ++k) {
    if (record_grid[k] <= record_grid[k - 1]) {
      throw std::invalid_argument("record grid must be strictly increasing");
    }
  }

  const TwoPointDistribution& data = sop.data;
  const Point& v_atom = data.v();
  const Point& w_atom = data.w();
  const double p_v = data.p_v();

  Point bound;
  const bool check_bound = options.check_bound && kind.is_adam();
  if (check_bound) {
    bound.resize(d);
    const double gamma1 = schedule(1);
    for (std::size_t i = 0; i < d; ++i) {
      const double c = std::max(std::abs(v_atom[i]), std::abs(w_atom[i]));
      bound[i] = trajectory_bound(theta0[i], c, kind.hp, gamma1);
    }
  }

  Trajectory traj;
  traj.meta = TrajectoryMeta{rng.base_seed(), rng.stream_id(), batch, kind,
                             schedule.describe()};
  AdamState state = AdamState::initial(theta0);
  Point g(d);
  const double batch_size = static_cast<double>(batch);
  auto next_record = record_grid.begin();
  while (next_record != record_grid.end() && *next_record == 0) {
    traj.steps.push_back(0);
    traj.thetas.push_back(state.theta);
    ++next_record;
  }

  for (std::size_t n = 1; n <= n_steps; ++n) {
    std::size_t hits_v = 0;
    for (std::size_t m = 0; m < batch; ++m) {
      if (rng.uniform() < p_v) ++hits_v;
    }
    const auto hits_w = static_cast<double>(batch - hits_v);
    const auto hv = static_cast<double>(hits_v);
    for (std::size_t i = 0; i < d; ++i) {
      // batch mean of 2 (theta - x_m)
      g[i] = 2.0 * (hv * (state.theta[i] - v_atom[i]) +
                    hits_w * (state.theta[i] - w_atom[i])) /
             batch_size;
    }
    const double gamma_n = schedule(n);
    state.n = n;
    if (kind.is_adam()) {
      adam_update(state.theta, state.m, state.v, g, n, kind.hp, gamma_n);
    } else {
      sgd_update(state.theta, g, gamma_n);
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(state.theta[i])) {
        throw numeric_error("non-finite iterate at step " + std::to_string(n));
      }
      if (check_bound && std::abs(state.theta[i]) > bound[i]) {
        throw numeric_error("iterate left the a priori bound at step " +
                            std::to_string(n));
      }
    }
    if (next_record != record_grid.end() && *next_record == n) {
      traj.steps.push_back(n);
      traj.thetas.push_back(state.theta);
      ++next_record;
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace adamlab
