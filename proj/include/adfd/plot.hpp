#pragma once

// Standalone SVG line and scatter plots with linear or log10 axes.

#include <filesystem>
#include <span>
#include <string>

#include "adfd/linalg.hpp"

namespace adfd {

struct PlotSeries {
  enum class Style { line, markers };
  std::string label;
  Vector x;
  Vector y;
  Style style = Style::line;
};

struct AxesSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Throws std::invalid_argument for no series, an empty series, mismatched
/// lengths, non-finite data, or non-positive data on a log axis.
std::string render_svg(std::span<const PlotSeries> series, const AxesSpec& axes);

/// render_svg written to path.
void emit_plot(std::span<const PlotSeries> series, const AxesSpec& axes,
               const std::filesystem::path& path);

}  // namespace adfd
