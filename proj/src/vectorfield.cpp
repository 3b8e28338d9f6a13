#include "adamlab/vectorfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adamlab/errors.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

namespace {
constexpr double kTiny = 1e-300;
}

namespace {

std::vector<double> binomial_weights(std::size_t batch, double p) {
  std::vector<double> w(batch + 1);
  double choose = 1.0;
  for (std::size_t j = 0; j <= batch; ++j) {
    if (j > 0) {
      choose = choose * static_cast<double>(batch - j + 1) /
               static_cast<double>(j);
    }
    w[j] = choose * std::pow(p, static_cast<double>(j)) *
           std::pow(1.0 - p, static_cast<double>(batch - j));
  }
  return w;
}

// Batch-mean gradient of outcome j (j draws of v, batch - j of w), per
// coordinate: out[j * d + i].
void outcome_gradients(const TwoPointDistribution& data, std::size_t batch,
                       std::span<const double> theta, std::vector<double>& out) {
  const std::size_t d = data.dim();
  out.resize((batch + 1) * d);
  const auto m = static_cast<double>(batch);
  for (std::size_t j = 0; j <= batch; ++j) {
    const auto nv = static_cast<double>(j);
    const auto nw = static_cast<double>(batch - j);
    for (std::size_t i = 0; i < d; ++i) {
      const double mean_x = (nv * data.v()[i] + nw * data.w()[i]) / m;
      out[j * d + i] = 2.0 * (theta[i] - mean_x);
    }
  }
}

inline std::size_t draw_count(RandomStream& rng, std::size_t batch,
                              double p_v) {
  std::size_t c = 0;
  for (std::size_t m = 0; m < batch; ++m) {
    if (rng.uniform() < p_v) ++c;
  }
  return c;
}

void check_theta(const TwoPointDistribution& data,
                 std::span<const double> theta) {
  if (theta.size() != data.dim()) {
    throw std::invalid_argument("theta dimension does not match the data");
  }
  for (double t : theta) {
    if (!std::isfinite(t)) throw numeric_error("non-finite theta");
  }
}

VFEstimate summarize_rows(std::span<const double> z, std::size_t rows,
                          std::size_t d, std::size_t n_terms,
                          std::uint64_t seed) {
  VFEstimate est;
  est.value.resize(d);
  est.std_error.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const MeanStderr ms = mean_stderr_strided(z, rows, d, i);
    est.value[i] = ms.mean;
    est.std_error[i] = ms.std_error;
  }
  est.truncation_N = n_terms;
  est.replications = rows;
  est.seed = seed;
  return est;
}

}  // namespace

std::size_t TruncationPolicy::terms(const AdamHyperparams& hp) const {
  if (fixed_terms) return *fixed_terms;
  if (!(tol > 0.0 && tol < 1.0)) {
    throw std::invalid_argument("truncation tolerance must lie in (0, 1)");
  }
  const double beta = std::max(hp.beta1(), hp.beta2());
  // smallest N with beta^(N+1) < tol
  auto n = static_cast<std::size_t>(
      std::max(0.0, std::floor(std::log(tol) / std::log(beta))));
  while (n > 0 && std::pow(beta, static_cast<double>(n)) < tol) --n;
  while (!(std::pow(beta, static_cast<double>(n + 1)) < tol)) ++n;
  return std::max<std::size_t>(n, 1);
}

std::size_t TruncationPolicy::numerator_terms(const AdamHyperparams& hp) const {
  const std::size_t n_all = terms(hp);
  if (fixed_terms) return n_all;
  const double r = hp.beta1() / std::sqrt(hp.beta2());
  const double scale = (1.0 - hp.beta1()) / std::sqrt(1.0 - hp.beta2()) /
                       (1.0 - r);
  double tail = scale * r;  // n1 = 0
  std::size_t n1 = 0;
  while (!(tail < tol) && n1 < n_all) {
    tail *= r;
    ++n1;
  }
  return n1;
}

VFPathSet::VFPathSet(TwoPointDistribution data, std::size_t batch,
                     const AdamHyperparams& hp, const TruncationPolicy& policy,
                     std::size_t replications, std::uint64_t seed)
    : data_(std::move(data)),
      batch_(batch),
      hp_(hp),
      terms_(policy.terms(hp)),
      head_terms_(policy.numerator_terms(hp)),
      replications_(replications),
      seed_(seed) {
  if (batch_ == 0) throw std::invalid_argument("batch size must be >= 1");
  if (batch_ > 255) throw std::invalid_argument("batch size must be <= 255");
  if (replications_ == 0) {
    throw std::invalid_argument("replications must be >= 1");
  }
  outcome_prob_ = binomial_weights(batch_, data_.p_v());
  const std::size_t width = batch_ + 1;
  a_.assign(replications_ * width, 0.0);
  b_.assign(replications_ * width, 0.0);
  const double p_v = data_.p_v();
  const double b1 = hp_.beta1();
  const double b2 = hp_.beta2();
  const std::size_t n_terms = terms_;
  const auto rows = static_cast<std::ptrdiff_t>(replications_);

#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    RandomStream rng = make_stream(seed_, static_cast<std::uint64_t>(r));
    double* a = a_.data() + static_cast<std::size_t>(r) * width;
    double* b = b_.data() + static_cast<std::size_t>(r) * width;
    double w1 = 1.0;
    double w2 = 1.0;
    for (std::size_t n = 0; n <= n_terms; ++n) {
      const std::size_t c = draw_count(rng, batch_, p_v);
      a[c] += w2;
      b[c] += w1;
      // flush before the weights go subnormal; those terms are below 1e-300
      w1 = w1 < kTiny ? 0.0 : w1 * b1;
      w2 = w2 < kTiny ? 0.0 : w2 * b2;
    }
  }
}

VFPathSet VFPathSet::mirrored() const {
  VFPathSet out;
  out.data_ = data_;
  out.batch_ = batch_;
  out.hp_ = hp_;
  out.terms_ = terms_;
  out.head_terms_ = head_terms_;
  out.replications_ = replications_;
  out.seed_ = seed_;
  out.reflected_ = !reflected_;
  out.outcome_prob_ = outcome_prob_;
  const std::size_t width = batch_ + 1;
  out.a_.resize(a_.size());
  out.b_.resize(b_.size());
  // reflecting every draw sends j draws of v to batch - j draws of v; the
  // reflected atom values coincide with the original ones only for
  // symmetric data, so this is meant for that case.
  for (std::size_t r = 0; r < replications_; ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      out.a_[r * width + j] = a_[r * width + (batch_ - j)];
      out.b_[r * width + j] = b_[r * width + (batch_ - j)];
    }
  }
  return out;
}

std::vector<double> VFPathSet::replicate_values(
    std::span<const double> theta, VFEstimator estimator) const {
  check_theta(data_, theta);
  const std::size_t d = data_.dim();
  const std::size_t width = batch_ + 1;
  const double b1 = hp_.beta1();
  const double b2 = hp_.beta2();
  const double eps = hp_.epsilon();
  std::vector<double> g;
  outcome_gradients(data_, batch_, theta, g);
  std::vector<double> z(replications_ * d, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(replications_);

  if (estimator == VFEstimator::plain) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const double* a = a_.data() + static_cast<std::size_t>(r) * width;
      const double* b = b_.data() + static_cast<std::size_t>(r) * width;
      for (std::size_t i = 0; i < d; ++i) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const double gj = g[j * d + i];
          num += gj * b[j];
          den += gj * gj * a[j];
        }
        z[static_cast<std::size_t>(r) * d + i] =
            -(1.0 - b1) * num / (eps + std::sqrt((1.0 - b2) * den));
      }
    }
    return z;
  }

  const std::size_t n_head = head_terms_;
  std::vector<double> w1(n_head + 1);
  std::vector<double> w2(n_head + 1);
  {
    double p1 = 1.0;
    double p2 = 1.0;
    for (std::size_t n = 0; n <= n_head; ++n) {
      w1[n] = p1;
      w2[n] = (1.0 - b2) * p2;
      p1 *= b1;
      p2 *= b2;
    }
  }
  const double p_v = data_.p_v();

#pragma omp parallel num_threads(thread_count())
  {
    std::vector<double> total(d);
    std::vector<double> acc(d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const double* a = a_.data() + static_cast<std::size_t>(r) * width;
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const double gj = g[j * d + i];
          s += gj * gj * a[j];
        }
        total[i] = (1.0 - b2) * s;
        acc[i] = 0.0;
      }
      RandomStream rng = make_stream(seed_, static_cast<std::uint64_t>(r));
      for (std::size_t n = 0; n <= n_head; ++n) {
        std::size_t c = draw_count(rng, batch_, p_v);
        if (reflected_) c = batch_ - c;
        for (std::size_t i = 0; i < d; ++i) {
          const double gc = g[c * d + i];
          const double rest = total[i] - w2[n] * gc * gc;
          double e = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            const double gj = g[j * d + i];
            const double s = std::max(0.0, rest + w2[n] * gj * gj);
            e += outcome_prob_[j] * gj / (eps + std::sqrt(s));
          }
          acc[i] += w1[n] * e;
        }
      }
      for (std::size_t i = 0; i < d; ++i) {
        z[static_cast<std::size_t>(r) * d + i] = -(1.0 - b1) * acc[i];
      }
    }
  }
  return z;
}

VFEstimate VFPathSet::summarize(std::span<const double> z,
                                std::size_t d) const {
  return summarize_rows(z, replications_, d, terms_, seed_);
}

VFEstimate VFPathSet::evaluate(std::span<const double> theta,
                               VFEstimator estimator) const {
  const std::vector<double> z = replicate_values(theta, estimator);
  return summarize(z, data_.dim());
}

VFEstimate VFPathSet::evaluate_paired(std::span<const double> theta,
                                      VFEstimator estimator) const {
  if (!data_.symmetric()) {
    throw std::invalid_argument("paired estimator needs symmetric data");
  }
  check_theta(data_, theta);
  const Point mu = data_.mean();
  Point reflected(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    reflected[i] = 2.0 * mu[i] - theta[i];
  }
  std::vector<double> z = replicate_values(theta, estimator);
  const std::vector<double> zr = replicate_values(reflected, estimator);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = (z[k] - zr[k]) / 2.0;
  return summarize(z, data_.dim());
}

VFEstimate estimate_vf(const QuadraticSOP& sop, std::span<const double> theta,
                       const AdamHyperparams& hp, std::size_t batch,
                       const TruncationPolicy& policy,
                       std::size_t replications, std::uint64_t seed,
                       VFEstimator estimator) {
  check_theta(sop.data, theta);
  const VFPathSet paths(sop.data, batch, hp, policy, replications, seed);
  return paths.evaluate(theta, estimator);
}

namespace serial {

VFEstimate estimate_vf(const QuadraticSOP& sop, std::span<const double> theta,
                       const AdamHyperparams& hp, std::size_t batch,
                       const TruncationPolicy& policy,
                       std::size_t replications, std::uint64_t seed,
                       VFEstimator estimator) {
  const TwoPointDistribution& data = sop.data;
  check_theta(data, theta);
  if (batch == 0) throw std::invalid_argument("batch size must be >= 1");
  if (replications == 0) {
    throw std::invalid_argument("replications must be >= 1");
  }
  const std::size_t d = data.dim();
  const std::size_t n_terms = policy.terms(hp);
  const std::size_t n_head = policy.numerator_terms(hp);
  const double b1 = hp.beta1();
  const double b2 = hp.beta2();
  const double eps = hp.epsilon();
  const std::vector<double> prob = binomial_weights(batch, data.p_v());
  const auto m = static_cast<double>(batch);

  std::vector<double> z(replications * d);
  std::vector<double> grad((n_terms + 1) * d);
  for (std::size_t r = 0; r < replications; ++r) {
    RandomStream rng = make_stream(seed, r);
    for (std::size_t n = 0; n <= n_terms; ++n) {
      for (std::size_t i = 0; i < d; ++i) grad[n * d + i] = 0.0;
      for (std::size_t k = 0; k < batch; ++k) {
        const Point& x = sample(data, rng);
        for (std::size_t i = 0; i < d; ++i) {
          grad[n * d + i] += 2.0 * (theta[i] - x[i]);
        }
      }
      for (std::size_t i = 0; i < d; ++i) grad[n * d + i] /= m;
    }
    for (std::size_t i = 0; i < d; ++i) {
      double value = 0.0;
      if (estimator == VFEstimator::plain) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t n = 0; n <= n_terms; ++n) {
          const double gn = grad[n * d + i];
          num += std::pow(b1, static_cast<double>(n)) * gn;
          den += std::pow(b2, static_cast<double>(n)) * gn * gn;
        }
        value = -(1.0 - b1) * num / (eps + std::sqrt((1.0 - b2) * den));
      } else {
        for (std::size_t n = 0; n <= n_head; ++n) {
          double rest = 0.0;
          for (std::size_t k = 0; k <= n_terms; ++k) {
            if (k == n) continue;
            const double gk = grad[k * d + i];
            rest += std::pow(b2, static_cast<double>(k)) * gk * gk;
          }
          const double wn = std::pow(b2, static_cast<double>(n));
          double e = 0.0;
          for (std::size_t j = 0; j <= batch; ++j) {
            const double mean_x =
                (static_cast<double>(j) * data.v()[i] +
                 static_cast<double>(batch - j) * data.w()[i]) /
                m;
            const double gj = 2.0 * (theta[i] - mean_x);
            e += prob[j] * gj /
                 (eps + std::sqrt((1.0 - b2) * (rest + wn * gj * gj)));
          }
          value += std::pow(b1, static_cast<double>(n)) * e;
        }
        value *= -(1.0 - b1);
      }
      z[r * d + i] = value;
    }
  }
  return summarize_rows(z, replications, d, n_terms, seed);
}

}  // namespace serial

Point vf_deterministic(std::span<const double> x0,
                       std::span<const double> theta,
                       const AdamHyperparams& hp) {
  if (x0.size() != theta.size()) {
    throw std::invalid_argument("vf_deterministic: dimension mismatch");
  }
  Point f(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = 2.0 * (theta[i] - x0[i]);
    f[i] = -g / (hp.epsilon() + std::abs(g));
  }
  return f;
}

double vf_truncated_exact(const TwoPointDistribution& data, double theta,
                          const AdamHyperparams& hp, std::size_t batch,
                          std::size_t n_terms, std::size_t max_paths) {
  if (data.dim() != 1) {
    throw std::invalid_argument("vf_truncated_exact is scalar only");
  }
  if (batch == 0) throw std::invalid_argument("batch size must be >= 1");
  const std::size_t width = batch + 1;
  double paths = 1.0;
  for (std::size_t n = 0; n <= n_terms; ++n) {
    paths *= static_cast<double>(width);
    if (paths > static_cast<double>(max_paths)) {
      throw std::invalid_argument("enumeration too large: (M+1)^(N+1) > " +
                                  std::to_string(max_paths));
    }
  }
  const std::vector<double> prob = binomial_weights(batch, data.p_v());
  std::vector<double> g(width);
  for (std::size_t j = 0; j < width; ++j) {
    const double mean_x = (static_cast<double>(j) * data.v()[0] +
                           static_cast<double>(batch - j) * data.w()[0]) /
                          static_cast<double>(batch);
    g[j] = 2.0 * (theta - mean_x);
  }
  const double b1 = hp.beta1();
  const double b2 = hp.beta2();
  const double eps = hp.epsilon();

  // odometer over count sequences, carrying prefix sums per depth
  const std::size_t depth = n_terms + 1;
  std::vector<std::size_t> digit(depth, 0);
  std::vector<double> weight(depth + 1, 1.0);
  std::vector<double> num(depth + 1, 0.0);
  std::vector<double> den(depth + 1, 0.0);
  std::vector<double> p1(depth);
  std::vector<double> p2(depth);
  for (std::size_t n = 0; n < depth; ++n) {
    p1[n] = std::pow(b1, static_cast<double>(n));
    p2[n] = std::pow(b2, static_cast<double>(n));
  }
  auto refresh_from = [&](std::size_t level) {
    for (std::size_t n = level; n < depth; ++n) {
      const std::size_t j = digit[n];
      weight[n + 1] = weight[n] * prob[j];
      num[n + 1] = num[n] + p1[n] * g[j];
      den[n + 1] = den[n] + p2[n] * g[j] * g[j];
    }
  };
  refresh_from(0);
  double total = 0.0;
  while (true) {
    if (weight[depth] > 0.0) {
      total += weight[depth] * num[depth] /
               (eps + std::sqrt((1.0 - b2) * den[depth]));
    }
    std::size_t level = depth;
    while (level > 0) {
      --level;
      if (++digit[level] < width) break;
      digit[level] = 0;
      if (level == 0) {
        level = depth;  // wrapped completely
        break;
      }
    }
    if (level == depth) break;
    refresh_from(level);
  }
  return -(1.0 - b1) * total;
}

std::pair<double, double> default_bracket(const TwoPointDistribution& data) {
  if (data.dim() != 1) {
    throw std::invalid_argument("default_bracket is scalar only");
  }
  const double half =
      std::max(std::abs(data.v()[0]) + std::abs(data.w()[0]), 1.0);
  return {-half, half};
}

ZeroResult find_zero_1d(const QuadraticSOP& sop, const AdamHyperparams& hp,
                        std::size_t batch, const TruncationPolicy& policy,
                        std::size_t replications,
                        std::pair<double, double> bracket, double abs_tol,
                        std::uint64_t seed, const ZeroSearchOptions& options) {
  if (sop.dim() != 1) throw std::invalid_argument("find_zero_1d is scalar only");
  auto [lo, hi] = bracket;
  if (!(lo < hi)) throw std::invalid_argument("bracket needs lo < hi");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");

  const VFPathSet paths(sop.data, batch, hp, policy, replications, seed);
  auto frozen = [&](double t) {
    const double theta[1] = {t};
    return paths.evaluate(theta, options.estimator);
  };
  const double k = options.confidence_sigmas;
  const VFEstimate f_lo = frozen(lo);
  const VFEstimate f_hi = frozen(hi);
  if (!(f_lo.value[0] - k * f_lo.std_error[0] > 0.0) ||
      !(f_hi.value[0] + k * f_hi.std_error[0] < 0.0)) {
    throw bracket_error("no confident sign change on [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]: f(lo) = " +
                        std::to_string(f_lo.value[0]) + ", f(hi) = " +
                        std::to_string(f_hi.value[0]));
  }

  ZeroResult result;
  const std::size_t grid_n = std::max<std::size_t>(options.monotonicity_grid, 3);
  std::vector<double> xs(grid_n);
  std::vector<double> fs(grid_n);
  bool monotone = true;
  for (std::size_t q = 0; q < grid_n; ++q) {
    xs[q] = lo + (hi - lo) * static_cast<double>(q) /
                     static_cast<double>(grid_n - 1);
    fs[q] = q == 0 ? f_lo.value[0]
                   : (q + 1 == grid_n ? f_hi.value[0] : frozen(xs[q]).value[0]);
    if (q > 0 && fs[q] > fs[q - 1]) monotone = false;
  }
  result.monotonicity_verified = monotone;
  if (!monotone) {
    for (std::size_t q = 0; q + 1 < grid_n; ++q) {
      if (fs[q] > 0.0 && fs[q + 1] <= 0.0) {
        lo = xs[q];
        hi = xs[q + 1];
        break;
      }
    }
  }

  std::size_t iterations = 0;
  while (hi - lo > abs_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = frozen(mid).value[0];
    ++iterations;
    if (f_mid > 0.0) {
      lo = mid;
    } else if (f_mid < 0.0) {
      hi = mid;
    } else {
      lo = hi = mid;
    }
  }
  result.theta_star = 0.5 * (lo + hi);
  result.bracket = {lo, hi};
  result.iterations = iterations;

  const double h = 1e-3 * (bracket.second - bracket.first);
  result.slope =
      (frozen(result.theta_star + h).value[0] -
       frozen(result.theta_star - h).value[0]) /
      (2.0 * h);

  const VFPathSet fresh(sop.data, batch, hp, policy, replications,
                        derive_seed(seed, 1));
  const double theta_star[1] = {result.theta_star};
  result.residual = fresh.evaluate(theta_star, options.estimator);
  const double se = result.residual.std_error[0];
  result.uncertainty =
      abs_tol + (se == 0.0 ? 0.0
                           : (result.slope != 0.0
                                  ? 3.0 * se / std::abs(result.slope)
                                  : std::numeric_limits<double>::infinity()));
  return result;
}

double half_concave_map(double x, double c, double kappa, double eps) {
  return x / (eps + std::sqrt(c + kappa * x * x));
}

HalfConcavityReport half_concavity_probe(double c, double kappa, double eps,
                                         std::span<const double> grid,
                                         double step) {
  if (!(c >= 0.0) || !(kappa > 0.0) || !(eps > 0.0) || !(step > 0.0)) {
    throw std::invalid_argument("half_concavity_probe: need c >= 0, kappa, "
                                "eps, step > 0");
  }
  HalfConcavityReport rep;
  rep.min_derivative = std::numeric_limits<double>::infinity();
  rep.max_second_derivative_positive = -std::numeric_limits<double>::infinity();
  auto h = [&](double x) { return half_concave_map(x, c, kappa, eps); };
  for (double x : grid) {
    rep.oddness_defect = std::max(rep.oddness_defect, std::abs(h(x) + h(-x)));
    const double hp = h(x + step);
    const double hm = h(x - step);
    const double h0 = h(x);
    rep.min_derivative = std::min(rep.min_derivative, (hp - hm) / (2.0 * step));
    if (x > 0.0) {
      rep.max_second_derivative_positive =
          std::max(rep.max_second_derivative_positive,
                   (hp - 2.0 * h0 + hm) / (step * step));
    }
  }
  rep.increasing = rep.min_derivative > 0.0;
  rep.concave_on_positive = rep.max_second_derivative_positive < 0.0;
  return rep;
}

}  // namespace adamlab
