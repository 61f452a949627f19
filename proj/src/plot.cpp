#include "adfd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace adfd {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 86.0;
constexpr double kRight = 190.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 64.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0;  // in transformed units
  double hi = 1.0;
  std::vector<double> ticks;  // transformed units

  double transform(double v) const { return log ? std::log10(v) : v; }
  std::string label(double t) const { return tick_label(log ? std::pow(10.0, t) : t); }
};

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double step = r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0;
  return step * mag;
}

Axis make_axis(double lo, double hi, bool log) {
  Axis a;
  a.log = log;
  if (hi - lo <= 0.0) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  if (log) {
    a.lo = std::floor(lo);
    a.hi = std::ceil(hi);
    if (a.hi == a.lo) a.hi = a.lo + 1.0;
    const double step = std::max(1.0, std::ceil((a.hi - a.lo) / 8.0));
    for (double t = a.lo; t <= a.hi + 1e-9; t += step) a.ticks.push_back(t);
  } else {
    const double step = nice_step(hi - lo, 6);
    a.lo = std::floor(lo / step) * step;
    a.hi = std::ceil(hi / step) * step;
    for (double t = a.lo; t <= a.hi + step * 1e-9; t += step)
      a.ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return a;
}

void check_series(std::span<const PlotSeries> series, const AxesSpec& axes) {
  if (series.empty()) throw std::invalid_argument("emit_plot: no series");
  for (const auto& s : series) {
    if (s.x.empty() || s.y.empty())
      throw std::invalid_argument("emit_plot: series '" + s.label + "' is empty");
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("emit_plot: series '" + s.label + "' has mismatched lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw std::invalid_argument("emit_plot: series '" + s.label + "' has non-finite data");
      if (axes.log_x && !(s.x[i] > 0.0))
        throw std::invalid_argument("emit_plot: series '" + s.label +
                                    "' has non-positive x on a log axis");
      if (axes.log_y && !(s.y[i] > 0.0))
        throw std::invalid_argument("emit_plot: series '" + s.label +
                                    "' has non-positive y on a log axis");
    }
  }
}

}  // namespace

std::string render_svg(std::span<const PlotSeries> series, const AxesSpec& axes) {
  check_series(series, axes);

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double tx = axes.log_x ? std::log10(s.x[i]) : s.x[i];
      const double ty = axes.log_y ? std::log10(s.y[i]) : s.y[i];
      xlo = std::min(xlo, tx);
      xhi = std::max(xhi, tx);
      ylo = std::min(ylo, ty);
      yhi = std::max(yhi, ty);
    }
  }
  const Axis ax = make_axis(xlo, xhi, axes.log_x);
  const Axis ay = make_axis(ylo, yhi, axes.log_y);

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double t) { return kTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!axes.title.empty())
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(axes.title) << "</text>\n";

  os << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double t : ax.ticks)
    os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(t))
       << "\" y2=\"" << num(kTop + ph) << "\"/>\n";
  for (double t : ay.ticks)
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(kLeft + pw)
       << "\" y2=\"" << num(py(t)) << "\"/>\n";
  os << "</g>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ax.ticks)
    os << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18)
       << "\" text-anchor=\"middle\">" << escape(ax.label(t)) << "</text>\n";
  for (double t : ay.ticks)
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4)
       << "\" text-anchor=\"end\">" << escape(ay.label(t)) << "</text>\n";
  if (!axes.x_label.empty())
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 18)
       << "\" text-anchor=\"middle\">" << escape(axes.x_label) << "</text>\n";
  if (!axes.y_label.empty())
    os << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << num(kTop + ph / 2) << ")\">" << escape(axes.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    auto tx = [&](std::size_t i) { return px(ax.transform(s.x[i])); };
    auto ty = [&](std::size_t i) { return py(ay.transform(s.y[i])); };
    if (s.style == PlotSeries::Style::line) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << (i ? " " : "") << num(tx(i)) << ',' << num(ty(i));
      os << "\"/>\n";
    } else {
      os << "<g fill=\"" << color << "\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << "<circle cx=\"" << num(tx(i)) << "\" cy=\"" << num(ty(i)) << "\" r=\"2.5\"/>\n";
      os << "</g>\n";
    }
    const double ly = kTop + 12 + 20.0 * static_cast<double>(k);
    const double lx = kLeft + pw + 16;
    if (s.style == PlotSeries::Style::line)
      os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22)
         << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    else
      os << "<circle cx=\"" << num(lx + 11) << "\" cy=\"" << num(ly) << "\" r=\"3.5\" fill=\""
         << color << "\"/>\n";
    os << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_plot(std::span<const PlotSeries> series, const AxesSpec& axes,
               const std::filesystem::path& path) {
  const std::string svg = render_svg(series, axes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot: cannot write '" + path.string() + "'");
  out << svg;
  if (!out) throw std::runtime_error("emit_plot: write failed for '" + path.string() + "'");
}

}  // namespace adfd
