#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adamlab/vectorfield.hpp"

namespace adamlab {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string failure;  // first failing assertion, empty on success
  double seconds = 0.0;
};

/// Signature of estimate_vf with the estimator fixed; lets tests substitute
/// a broken estimator.
using VFEstimatorFn = std::function<VFEstimate(
    const QuadraticSOP&, std::span<const double>, const AdamHyperparams&,
    std::size_t, const TruncationPolicy&, std::size_t, std::uint64_t)>;

/// estimate_vf with the plain estimator.
VFEstimatorFn default_vf_estimator();

struct SelftestOptions {
  VFEstimatorFn estimator = default_vf_estimator();
  std::uint64_t seed = 20240607;
};

/// 20 random tiny configurations (M <= 2, N <= 6) against the exact
/// enumeration within 4 stderr, and the point-mass case against the closed
/// form to 1e-12.
SuiteResult oracle_equivalence_suite(const VFEstimatorFn& estimator,
                                     std::uint64_t seed);
SuiteResult half_concavity_suite();
SuiteResult paired_oddness_suite(std::uint64_t seed);
SuiteResult boundedness_suite(std::uint64_t seed);
SuiteResult bias_correction_suite();
SuiteResult schedule_suite();
SuiteResult deterministic_zero_suite();
/// Every experiment command at small sizes: identical CSV bytes on a rerun
/// with a different thread count, different bytes for a different seed.
SuiteResult seed_determinism_suite();

std::vector<SuiteResult> run_selftest(const SelftestOptions& options = {});

/// Pass/fail table; times are omitted when with_times is false so the text
/// is reproducible.
std::string format_report(const std::vector<SuiteResult>& results,
                          bool with_times);

}  // namespace adamlab
