#include "gak/saliency.hpp"

#include <cmath>

#include "gak/error.hpp"

namespace gak {

double l2_norm(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double x : v) {
    const double r = x / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

SaliencyMatrix reduce_gradients(const GradientTensor& gradients, const SaliencyOptions& options) {
  if (!(options.floor < -100.0)) {
    throw Error(ErrorKind::InvalidArgument, "saliency floor must be below -100");
  }
  const int shift = gradients.frame_shift_ms;
  if (shift <= 0 || (!options.allow_any_frame_shift && shift != 10 && shift != 60)) {
    throw Error(ErrorKind::InvalidArgument,
                "frame shift " + std::to_string(shift) + " ms (expected 10 or 60)");
  }
  const Tensor3& g = gradients.values;
  if (g.dim0() == 0 || g.dim1() == 0 || g.dim2() == 0) {
    throw Error(ErrorKind::ShapeError, "gradient tensor has an empty dimension");
  }

  SaliencyMatrix out{Matrix(g.dim0(), g.dim1()), shift, options.floor};
  for (std::size_t s = 0; s < g.dim0(); ++s) {
    for (std::size_t t = 0; t < g.dim1(); ++t) {
      const auto v = g.fiber(s, t);
      for (std::size_t d = 0; d < v.size(); ++d) {
        if (!std::isfinite(v[d])) {
          throw Error(ErrorKind::NonFiniteInput, "gradient at (s=" + std::to_string(s) +
                                                     ", t=" + std::to_string(t) +
                                                     ", d=" + std::to_string(d) + ")");
        }
      }
      const double norm = l2_norm(v);
      out.values(s, t) = norm > 0.0 ? std::log(norm) : options.floor;
    }
  }
  return out;
}

}  // namespace gak
