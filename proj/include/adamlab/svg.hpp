#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adamlab/table.hpp"

namespace adamlab {

struct PlotSpec {
  std::string x_column;
  std::vector<std::string> y_columns;
  bool log_x = false;
  bool log_y = false;
  std::string title;
};

/// Self-contained SVG: one polyline per y column, axes, ticks, legend.
/// Throws numeric_error naming the row for a nonpositive value on a log
/// axis, std::invalid_argument for unknown or non-numeric columns.
std::string render_svg(const ResultTable& table, const PlotSpec& spec);

void emit_svg_plot(const ResultTable& table, const PlotSpec& spec,
                   const std::filesystem::path& path);

}  // namespace adamlab
