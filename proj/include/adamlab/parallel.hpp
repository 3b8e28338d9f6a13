#pragma once

#include <cstddef>
#include <span>

namespace adamlab {

/// Worker threads for the OpenMP kernels: set_thread_count() if called with
/// n > 0, else ADAMLAB_THREADS if set to a positive integer, else the OpenMP
/// default. Kernels write per-replication slots and fold them serially in
/// replication order, so results never depend on this value.
int thread_count();
void set_thread_count(int n);

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of the mean (sample std / sqrt(count)), folded in
/// index order. stderr is 0 for fewer than two values.
MeanStderr mean_stderr(std::span<const double> values);

/// Same over a strided column: values[k * stride + offset], k < count.
MeanStderr mean_stderr_strided(std::span<const double> values,
                               std::size_t count, std::size_t stride,
                               std::size_t offset);

}  // namespace adamlab
