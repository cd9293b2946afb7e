#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gak/matrix.hpp"

namespace gak {

enum class ColorMap { Grayscale, Viridis };

struct HeatmapOptions {
  ColorMap color = ColorMap::Viridis;
  /// Values below this percentile (0-100) are raised to it before scaling.
  double clip_percentile = 0.0;
  int cell_width = 8;
  int cell_height = 8;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Color for a value already scaled to [0, 1]; darker is lower.
Rgb color_at(ColorMap map, double fraction);

/// One <rect> per cell, row 0 at the top, linear value-to-color mapping
/// over [min, max] after percentile clipping.
std::string render_heatmap_svg(const Matrix& m, const HeatmapOptions& options = {});

void render_heatmap(const Matrix& m, const std::filesystem::path& path, const HeatmapOptions& options = {});

}  // namespace gak
