#include "adamlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace adamlab {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

AdamHyperparams::AdamHyperparams(double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  if (!(beta1 > 0.0 && beta1 < 1.0)) {
    throw std::invalid_argument("beta1 must lie in (0, 1)");
  }
  if (!(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("beta2 must lie in (0, 1)");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (!(beta1 * beta1 < beta2)) {
    throw std::invalid_argument("beta1^2 < beta2 violated (beta1^2 = " +
                                fmt_double(beta1 * beta1) +
                                ", beta2 = " + fmt_double(beta2) + ")");
  }
}

LearningRateSchedule LearningRateSchedule::power_law(double c, double r) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("learning-rate scale c must be positive");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("learning-rate exponent r must be positive");
  }
  LearningRateSchedule s;
  s.kind_ = Kind::power_law;
  s.c_ = c;
  s.r_ = r;
  return s;
}

LearningRateSchedule LearningRateSchedule::constant(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("constant learning rate must be positive");
  }
  LearningRateSchedule s;
  s.kind_ = Kind::constant;
  s.c_ = gamma;
  return s;
}

LearningRateSchedule LearningRateSchedule::table(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("learning-rate table is empty");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw std::invalid_argument("learning-rate table entry " +
                                  std::to_string(i + 1) + " is not positive");
    }
    if (i > 0 && values[i] > values[i - 1]) {
      throw std::invalid_argument("learning-rate table increases at n = " +
                                  std::to_string(i + 1));
    }
  }
  LearningRateSchedule s;
  s.kind_ = Kind::table;
  s.values_ = std::move(values);
  return s;
}

double LearningRateSchedule::operator()(std::size_t n) const {
  if (n == 0) {
    throw std::out_of_range("learning rate is indexed from n = 1");
  }
  switch (kind_) {
    case Kind::power_law:
      return c_ * std::pow(static_cast<double>(n), -r_);
    case Kind::constant:
      return c_;
    case Kind::table:
      if (n > values_.size()) {
        throw std::out_of_range("learning-rate table has no entry for n = " +
                                std::to_string(n));
      }
      return values_[n - 1];
  }
  return 0.0;
}

double LearningRateSchedule::decrement(std::size_t n) const {
  switch (kind_) {
    case Kind::power_law: {
      // c n^-r (1 - (1 + 1/n)^-r)
      const double x = static_cast<double>(n);
      return -c_ * std::pow(x, -r_) * std::expm1(-r_ * std::log1p(1.0 / x));
    }
    case Kind::constant:
      return 0.0;
    case Kind::table:
      return (*this)(n) - (*this)(n + 1);
  }
  return 0.0;
}

std::string LearningRateSchedule::describe() const {
  switch (kind_) {
    case Kind::power_law:
      return "power_law(c=" + fmt_double(c_) + ",r=" + fmt_double(r_) + ")";
    case Kind::constant:
      return "constant(gamma=" + fmt_double(c_) + ")";
    case Kind::table:
      return "table(size=" + std::to_string(values_.size()) + ")";
  }
  return {};
}

TwoPointDistribution::TwoPointDistribution(Point v, Point w, double p_v)
    : v_(std::move(v)), w_(std::move(w)), p_v_(p_v) {
  if (v_.empty()) {
    throw std::invalid_argument("two-point law needs dimension >= 1");
  }
  require_same_dim(v_.size(), w_.size(), "two-point law");
  if (!(p_v >= 0.0 && p_v <= 1.0)) {
    throw std::invalid_argument("p_v must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (!std::isfinite(v_[i]) || !std::isfinite(w_[i])) {
      throw std::invalid_argument("two-point law atoms must be finite");
    }
  }
}

TwoPointDistribution TwoPointDistribution::point_mass(Point x0) {
  Point copy = x0;
  return TwoPointDistribution(std::move(x0), std::move(copy), 1.0);
}

Point TwoPointDistribution::mean() const {
  Point m(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    m[i] = p_v_ * v_[i] + (1.0 - p_v_) * w_[i];
  }
  return m;
}

Point TwoPointDistribution::variance() const {
  Point var(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double d = v_[i] - w_[i];
    var[i] = p_v_ * (1.0 - p_v_) * d * d;
  }
  return var;
}

bool TwoPointDistribution::degenerate() const noexcept {
  return v_ == w_ || p_v_ == 0.0 || p_v_ == 1.0;
}

bool TwoPointDistribution::symmetric() const noexcept {
  return degenerate() || p_v_ == 0.5;
}

double TwoPointDistribution::bound() const noexcept {
  double c = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    c = std::max({c, std::abs(v_[i]), std::abs(w_[i])});
  }
  return c;
}

TwoPointDistribution two_point_mean_zero(double v, double w) {
  if (!(v < 0.0) || !(w > 0.0) || !std::isfinite(v) || !std::isfinite(w)) {
    throw std::domain_error("mean-zero two-point law needs v < 0 < w");
  }
  return TwoPointDistribution::scalar(v, w, w / (w - v));
}

const Point& sample(const TwoPointDistribution& dist, RandomStream& rng) {
  return rng.uniform() < dist.p_v() ? dist.v() : dist.w();
}

double QuadraticSOP::loss(std::span<const double> theta,
                          std::span<const double> x) {
  require_same_dim(theta.size(), x.size(), "loss");
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - x[i];
    s += d * d;
  }
  return s;
}

Point gradient(std::span<const double> theta, std::span<const double> x) {
  require_same_dim(theta.size(), x.size(), "gradient");
  Point g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    g[i] = 2.0 * (theta[i] - x[i]);
  }
  return g;
}

MiniBatchGradient minibatch_gradient(std::span<const double> theta,
                                     std::span<const Point> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("mini-batch is empty");
  }
  MiniBatchGradient out{Point(theta.size(), 0.0), batch.size()};
  for (const Point& x : batch) {
    require_same_dim(theta.size(), x.size(), "minibatch_gradient");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      out.value[i] += 2.0 * (theta[i] - x[i]);
    }
  }
  const double m = static_cast<double>(batch.size());
  for (double& g : out.value) g /= m;
  return out;
}

Point minimizer(const QuadraticSOP& sop) { return sop.data.mean(); }

}  // namespace adamlab
