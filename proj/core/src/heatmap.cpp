#include "gak/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "gak/error.hpp"

namespace gak {
namespace {

// Samples of the viridis colormap at 0, 1/8, ..., 1.
constexpr std::array<Rgb, 9> kViridis{{
    {68, 1, 84},
    {71, 44, 122},
    {59, 81, 139},
    {44, 113, 142},
    {33, 144, 141},
    {39, 173, 129},
    {92, 200, 99},
    {170, 220, 50},
    {253, 231, 37},
}};

std::uint8_t lerp(std::uint8_t a, std::uint8_t b, double f) {
  return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * f));
}

}  // namespace

Rgb color_at(ColorMap map, double fraction) {
  const double f = std::clamp(fraction, 0.0, 1.0);
  if (map == ColorMap::Grayscale) {
    const auto v = static_cast<std::uint8_t>(std::lround(255.0 * f));
    return {v, v, v};
  }
  const double pos = f * static_cast<double>(kViridis.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), kViridis.size() - 2);
  const double w = pos - static_cast<double>(lo);
  const Rgb& a = kViridis[lo];
  const Rgb& b = kViridis[lo + 1];
  return {lerp(a.r, b.r, w), lerp(a.g, b.g, w), lerp(a.b, b.b, w)};
}

std::string render_heatmap_svg(const Matrix& m, const HeatmapOptions& options) {
  if (m.empty()) throw Error(ErrorKind::ShapeError, "cannot render an empty matrix");
  if (options.cell_width <= 0 || options.cell_height <= 0) {
    throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
  }
  if (!(options.clip_percentile >= 0.0 && options.clip_percentile <= 100.0)) {
    throw Error(ErrorKind::InvalidArgument, "clip percentile must lie in [0, 100]");
  }
  for (double v : m.values()) {
    if (std::isnan(v)) throw Error(ErrorKind::NonFiniteInput, "matrix holds NaN");
  }

  std::vector<double> sorted = m.values();
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(options.clip_percentile / 100.0 * static_cast<double>(sorted.size())));
  const double low = sorted[rank == 0 ? 0 : rank - 1];
  const double high = sorted.back();
  if (!std::isfinite(low) || !std::isfinite(high)) {
    throw Error(ErrorKind::NonFiniteInput, "matrix holds Inf after clipping");
  }

  const int w = options.cell_width;
  const int h = options.cell_height;
  const auto width = static_cast<long long>(m.cols()) * w;
  const auto height = static_cast<long long>(m.rows()) * h;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "shape-rendering=\"crispEdges\">\n",
      width, height);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = std::max(m(r, c), low);
      const double f = high > low ? (v - low) / (high - low) : 0.5;
      const Rgb col = color_at(options.color, f);
      svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{:02x}{:02x}{:02x}\"/>\n",
                         static_cast<long long>(c) * w, static_cast<long long>(r) * h, w, h, col.r,
                         col.g, col.b);
    }
  }
  svg += "</svg>\n";
  return svg;
}

void render_heatmap(const Matrix& m, const std::filesystem::path& path, const HeatmapOptions& options) {
  const std::string svg = render_heatmap_svg(m, options);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << svg;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace gak
