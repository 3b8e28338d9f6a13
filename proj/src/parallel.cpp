#include "adamlab/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

namespace adamlab {

namespace {
std::atomic<int> g_override{0};
}

int thread_count() {
  const int forced = g_override.load();
  if (forced > 0) return forced;
  if (const char* env = std::getenv("ADAMLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

MeanStderr mean_stderr_strided(std::span<const double> values,
                               std::size_t count, std::size_t stride,
                               std::size_t offset) {
  MeanStderr out;
  if (count == 0) return out;
  // two-pass: mean, then centered sum of squares
  double sum = 0.0;
  bool constant = true;
  const double first = values[offset];
  for (std::size_t k = 0; k < count; ++k) {
    sum += values[k * stride + offset];
    constant = constant && values[k * stride + offset] == first;
  }
  // a constant column is reported exactly, without rounding noise
  if (constant) {
    out.mean = first;
    return out;
  }
  out.mean = sum / static_cast<double>(count);
  if (count < 2) return out;
  double ss = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double d = values[k * stride + offset] - out.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(count - 1);
  out.std_error = std::sqrt(var / static_cast<double>(count));
  return out;
}

MeanStderr mean_stderr(std::span<const double> values) {
  return mean_stderr_strided(values, values.size(), 1, 0);
}

}  // namespace adamlab
