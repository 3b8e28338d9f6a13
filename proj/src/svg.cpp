#include "adamlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "adamlab/errors.hpp"

namespace adamlab {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 180.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0;  // in transformed units
  double hi = 1.0;

  double t(double x) const { return log ? std::log10(x) : x; }

  void fit(const std::vector<double>& values) {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (double x : values) {
      lo = std::min(lo, t(x));
      hi = std::max(hi, t(x));
    }
    if (!(hi > lo)) {
      const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
      lo -= log ? 0.5 : pad;
      hi += log ? 0.5 : pad;
    } else if (log) {
      lo = std::floor(lo);
      hi = std::ceil(hi);
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }

  std::vector<double> ticks() const {  // in data units
    std::vector<double> out;
    if (log) {
      const double step = std::max(1.0, std::ceil((hi - lo) / 8.0));
      for (double e = std::ceil(lo); e <= hi + 1e-9; e += step) {
        out.push_back(std::pow(10.0, e));
      }
      return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {2.0, 5.0, 10.0}) {
      if (raw > step) step = m * mag;
    }
    for (double x = std::ceil(lo / step) * step; x <= hi + 1e-12 * step;
         x += step) {
      out.push_back(std::abs(x) < 1e-12 * step ? 0.0 : x);
    }
    return out;
  }
};

}  // namespace

std::string render_svg(const ResultTable& table, const PlotSpec& spec) {
  if (spec.y_columns.empty()) throw std::invalid_argument("no y columns");
  const std::size_t xc = table.column_index(spec.x_column);
  std::vector<std::size_t> ycs;
  for (const auto& y : spec.y_columns) ycs.push_back(table.column_index(y));

  std::vector<double> xs;
  std::vector<double> all_y;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double x = table.number(r, xc);
    if (spec.log_x && !(x > 0.0)) {
      throw numeric_error("row " + std::to_string(r) + ": " + spec.x_column +
                          " = " + format_double(x) + " on a log axis");
    }
    xs.push_back(x);
    for (std::size_t k = 0; k < ycs.size(); ++k) {
      const double y = table.number(r, ycs[k]);
      if (spec.log_y && !(y > 0.0)) {
        throw numeric_error("row " + std::to_string(r) + ": " +
                            spec.y_columns[k] + " = " + format_double(y) +
                            " on a log axis");
      }
      all_y.push_back(y);
    }
  }

  Axis ax{spec.log_x};
  Axis ay{spec.log_y};
  if (!xs.empty()) {
    ax.fit(xs);
    ay.fit(all_y);
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (ax.t(x) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) {
    return kTop + ph - (ay.t(y) - ay.lo) / (ay.hi - ay.lo) * ph;
  };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
       "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
       " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"14\">" + escape(spec.title) + "</text>\n";
  }
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
       num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  if (!xs.empty()) {
    for (double t : ax.ticks()) {
      const double x = px(t);
      s += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" +
           num(x) + "\" y2=\"" + num(kTop + ph + 5) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + label(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
      const double y = py(t);
      s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(y) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\">" + label(t) + "</text>\n";
    }
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 16) +
       "\" text-anchor=\"middle\">" + escape(spec.x_column) +
       (spec.log_x ? " (log)" : "") + "</text>\n";
  s += "<text transform=\"translate(18 " + num(kTop + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" +
       (spec.log_y ? std::string("value (log)") : std::string("value")) +
       "</text>\n";

  for (std::size_t k = 0; k < ycs.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    if (table.rows.size() == 1) {
      s += "<circle cx=\"" + num(px(xs[0])) + "\" cy=\"" +
           num(py(table.number(0, ycs[k]))) + "\" r=\"4\" fill=\"" + color +
           "\"/>\n";
    } else if (!table.rows.empty()) {
      s += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (r) s += ' ';
        s += num(px(xs[r])) + "," + num(py(table.number(r, ycs[k])));
      }
      s += "\"/>\n";
    }
    const double ly = kTop + 16 + 20 * static_cast<double>(k);
    const double lx = kLeft + pw + 16;
    s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" +
         num(lx + 24) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) + "\">" +
         escape(spec.y_columns[k]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void emit_svg_plot(const ResultTable& table, const PlotSpec& spec,
                   const std::filesystem::path& path) {
  const std::string text = render_svg(table, spec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw io_error("write failed for " + path.string());
}

}  // namespace adamlab
