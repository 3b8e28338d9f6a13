#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adamlab/adam.hpp"
#include "adamlab/experiments.hpp"
#include "adamlab/model.hpp"
#include "adamlab/vectorfield.hpp"

namespace adamlab {

enum class Command {
  run,
  ensemble,
  vf_eval,
  vf_zero,
  sweep_beta2,
  sweep_batch,
  sweep_asym,
  check_schedule,
  selftest,
};

/// "run", "ensemble", "vf-eval", ... (also the CSV file stem).
std::string_view command_name(Command c);
std::optional<Command> command_from_name(std::string_view name);

struct KeyInfo {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every accepted key, in provenance order.
std::span<const KeyInfo> config_schema();

using KeyValues = std::map<std::string, std::string, std::less<>>;

/// Reads `key = value` lines; '#' starts a comment, blank lines are skipped.
/// A file written by emit_csv is also accepted: its "# key = value"
/// provenance lines are read and the rest is ignored.
/// Throws io_error if unreadable, config_error on a malformed line.
KeyValues read_config_file(const std::filesystem::path& path);

struct RunConfig {
  Command command = Command::ensemble;
  /// Raw value of every schema key after file, flags, and defaults.
  KeyValues resolved;

  AdamHyperparams hp;
  OptimizerKind optimizer = OptimizerKind::adam(AdamHyperparams{});
  LearningRateSchedule schedule = LearningRateSchedule::power_law(1.0, 0.99);
  std::size_t batch = 1;
  std::size_t steps = 400'000;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  double v = -1.0;
  double w = 0.1;
  std::optional<double> p_v;  // empty: the mean-zero probability w / (w - v)
  double theta0 = 1.0;
  Reference::Kind ref = Reference::Kind::minimizer;
  ErrorMode error = ErrorMode::abs_distance;
  std::vector<double> theta{0.0};
  std::size_t vf_reps = 100'000;
  TruncationPolicy policy;
  std::optional<VFEstimator> estimator;  // empty: per-command default
  double zero_tol = 1e-7;
  std::optional<double> lo;
  std::optional<double> hi;
  std::vector<double> beta2_grid;
  std::vector<std::size_t> batch_grid;
  std::vector<double> w_grid;
  bool ensembles = true;
  std::size_t per_decade = 200;
  std::size_t n_max = 1'000'000;
  double p = 2.0;
  std::filesystem::path out = ".";
  bool plot = false;

  QuadraticSOP sop() const;
  EnsembleConfig ensemble() const;
  const std::string& value(std::string_view key) const;
};

/// Resolves file values, then flags, then defaults. Unknown keys and
/// out-of-range values throw config_error naming the key.
RunConfig resolve_config(Command command, const KeyValues& file_values,
                         const KeyValues& flags);

struct Invocation {
  RunConfig config;
  bool help = false;
};

/// argv[1] (and argv[2] for vf / sweep / check) name the command; then
/// `--key value`, `--key=value`, `--plot`, `--config FILE`. `replay FILE`
/// takes the command and keys from a CSV provenance block.
Invocation parse_args(int argc, const char* const* argv);

std::string usage();

}  // namespace adamlab
