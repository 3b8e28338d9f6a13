#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adamlab/rng.hpp"

namespace adamlab {

using Point = std::vector<double>;

/// Momentum, second-moment and regularization parameters of Adam.
/// Construction enforces 0 < beta1, beta2 < 1, epsilon > 0 and beta1^2 < beta2.
class AdamHyperparams {
 public:
  AdamHyperparams() : AdamHyperparams(0.9, 0.999, 1e-8) {}
  AdamHyperparams(double beta1, double beta2, double epsilon);

  double beta1() const noexcept { return beta1_; }
  double beta2() const noexcept { return beta2_; }
  double epsilon() const noexcept { return epsilon_; }

  friend bool operator==(const AdamHyperparams&,
                         const AdamHyperparams&) = default;

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
};

/// Step sizes gamma_n, n >= 1. Positive and non-increasing.
class LearningRateSchedule {
 public:
  enum class Kind { power_law, constant, table };

  /// gamma_n = c * n^(-r), c > 0, r > 0. The step-size conditions used by the
  /// convergence theory need r < 1; schedule_diagnostics reports on that.
  static LearningRateSchedule power_law(double c, double r);
  static LearningRateSchedule constant(double gamma);
  /// gamma_n = values[n - 1]; validated positive and non-increasing.
  static LearningRateSchedule table(std::vector<double> values);

  double operator()(std::size_t n) const;

  /// gamma_n - gamma_{n+1}, computed without cancellation for power laws.
  double decrement(std::size_t n) const;

  Kind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  double r() const noexcept { return r_; }
  std::size_t table_size() const noexcept { return values_.size(); }
  std::string describe() const;

 private:
  LearningRateSchedule() = default;

  Kind kind_ = Kind::constant;
  double c_ = 1.0;
  double r_ = 0.0;
  std::vector<double> values_;
};

/// Law of X in {v, w} with P(X = v) = p_v. The points are d-dimensional and
/// drawn jointly: one draw selects the whole vector v or the whole vector w.
class TwoPointDistribution {
 public:
  TwoPointDistribution(Point v, Point w, double p_v);

  static TwoPointDistribution point_mass(Point x0);
  static TwoPointDistribution scalar(double v, double w, double p_v) {
    return TwoPointDistribution(Point{v}, Point{w}, p_v);
  }

  std::size_t dim() const noexcept { return v_.size(); }
  const Point& v() const noexcept { return v_; }
  const Point& w() const noexcept { return w_; }
  double p_v() const noexcept { return p_v_; }
  double p_w() const noexcept { return 1.0 - p_v_; }

  Point mean() const;
  Point variance() const;
  /// Law of X - E[X] equals the law of E[X] - X. For two atoms this holds
  /// exactly when v == w or p_v == 1/2.
  bool symmetric() const noexcept;
  bool degenerate() const noexcept;
  /// max_i max(|v_i|, |w_i|)
  double bound() const noexcept;

 private:
  Point v_;
  Point w_;
  double p_v_;
};

/// Mean-zero scalar law on {v, w}: p_v = w / (w - v), p_w = -v / (w - v).
/// Throws std::domain_error unless v < 0 < w.
TwoPointDistribution two_point_mean_zero(double v, double w);

/// Returns v with probability p_v, else w. Consumes one uniform variate.
const Point& sample(const TwoPointDistribution& dist, RandomStream& rng);

/// Minimize theta -> E[ ||theta - X||^2 ] over theta.
struct QuadraticSOP {
  TwoPointDistribution data;

  std::size_t dim() const noexcept { return data.dim(); }
  static double loss(std::span<const double> theta, std::span<const double> x);
};

/// 2 (theta - x). Throws std::invalid_argument on dimension mismatch.
Point gradient(std::span<const double> theta, std::span<const double> x);

struct MiniBatchGradient {
  Point value;
  std::size_t batch_size = 0;
};

/// Mean over the batch of gradient(theta, x_m). Throws on an empty batch.
MiniBatchGradient minibatch_gradient(std::span<const double> theta,
                                     std::span<const Point> batch);

/// E[X], the unique minimizer of the quadratic objective.
Point minimizer(const QuadraticSOP& sop);

}  // namespace adamlab
