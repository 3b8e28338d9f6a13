#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "adamlab/config.hpp"
#include "adamlab/svg.hpp"
#include "adamlab/table.hpp"

namespace adamlab {

/// Runs one experiment command (not selftest) and returns its table with the
/// provenance block filled in. Deterministic for a fixed config.
ResultTable execute(const RunConfig& config);

/// Plot layout for a command's table; log axes only where every value is
/// positive.
PlotSpec plot_spec(const ResultTable& table);

/// One-line human summary of a table, for stdout.
std::string summarize(const ResultTable& table);

/// Full CLI: parse, run, write out/<command>.csv (and .svg with --plot).
/// Returns the process exit code: 0 ok, 1 selftest failure, 2 config,
/// 3 numeric, 4 I/O.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace adamlab
