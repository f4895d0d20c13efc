#include "recavg/runner/plot.hpp"

#include "recavg/runner/csv.hpp"
#include "recavg/runner/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace recavg::runner {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

// Renders a line chart. Same input, same bytes.
std::string render(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                   const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.pad();
  yr.pad();
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto sx = [&](double v) { return kMargin + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double v) { return kHeight - kMargin - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n"
      << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    out << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << num(kHeight - kMargin) << "\" x2=\""
        << num(sx(xv)) << "\" y2=\"" << num(kHeight - kMargin + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(kHeight - kMargin + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(xv)
        << "</text>\n"
        << "<line x1=\"" << num(kMargin - 5) << "\" y1=\"" << num(sy(yv)) << "\" x2=\""
        << num(kMargin) << "\" y2=\"" << num(sy(yv)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(kMargin - 8) << "\" y=\"" << num(sy(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
      << "</text>\n"
      << "<text x=\"16\" y=\"" << num(kHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kHeight / 2) << ")\" font-family=\"sans-serif\" font-size=\"13\">" << ylabel
      << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << (i ? " " : "") << num(sx(s.x[i])) << ',' << num(sy(s.y[i]));
    }
    out << "\"/>\n";
    const double ly = kMargin + 16 + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << num(kWidth - kMargin - 110) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(kWidth - kMargin - 90) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(kWidth - kMargin - 84) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

const char* color_of(Representation rep) {
  switch (rep) {
    case Representation::full: return "#1f77b4";
    case Representation::transformed: return "#2ca02c";
    case Representation::rora: return "#d62728";
  }
  return "black";
}

}  // namespace

std::vector<std::filesystem::path> plot(const std::filesystem::path& dir) {
  struct Loaded {
    Representation rep;
    Table table;
  };
  std::vector<Loaded> loaded;
  for (Representation rep :
       {Representation::full, Representation::transformed, Representation::rora}) {
    const auto file = dir / (std::string(representation_name(rep)) + ".csv");
    if (!std::filesystem::exists(file)) continue;
    Table t = read_csv(file);
    if (t.rows.empty()) throw PlotError(file.string() + ": empty trajectory");
    loaded.push_back({rep, std::move(t)});
  }
  if (loaded.empty()) throw PlotError("no trajectory CSVs (full/transformed/rora) in " + dir.string());

  auto make = [&](const std::string& xc, const std::string& yc) {
    std::vector<Series> out;
    for (const auto& l : loaded) {
      out.push_back({std::string(representation_name(l.rep)), color_of(l.rep), l.table.column(xc),
                     l.table.column(yc)});
    }
    return out;
  };

  // Render everything before touching the filesystem.
  const std::vector<std::pair<std::string, std::string>> docs{
      {"signal.svg", render("Signal strength versus time", "t", "c(p(t))", make("t", "c"))},
      {"trajectory_xy.svg", render("Trajectory (x-y projection)", "x", "y", make("px", "py"))},
      {"trajectory_xz.svg", render("Trajectory (x-z projection)", "x", "z", make("px", "pz"))},
      {"trajectory_yz.svg", render("Trajectory (y-z projection)", "y", "z", make("py", "pz"))}};

  std::vector<std::filesystem::path> files;
  for (const auto& [name, text] : docs) {
    const auto file = dir / name;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw PlotError("cannot write " + file.string());
    out << text;
    files.push_back(file);
  }
  return files;
}

}  // namespace recavg::runner
