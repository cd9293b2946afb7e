#pragma once

#include <string>

#include "gak/matrix.hpp"

namespace gak {

inline constexpr double kDefaultSaliencyFloor = -1e9;

/// Per-label gradients of log p(label_s | ...) w.r.t. one layer's input
/// frames. values is (label position incl. EOS) x frame x feature.
struct GradientTensor {
  Tensor3 values;
  int frame_shift_ms = 10;
  std::string layer_tag;
};

/// Log L2 norm of each gradient vector; zero-norm cells hold floor_value.
struct SaliencyMatrix {
  Matrix values;
  int frame_shift_ms = 10;
  double floor_value = kDefaultSaliencyFloor;
};

struct SaliencyOptions {
  double floor = kDefaultSaliencyFloor;
  /// Accept frame shifts other than 10 and 60 ms.
  bool allow_any_frame_shift = false;
};

/// out[s,t] = ln ||g[s,t,:]||_2, or options.floor where the norm is zero.
///
/// Throws InvalidArgument if floor >= -100 or the frame shift is not
/// allowed, and NonFiniteInput naming (s,t,d) of the first NaN/Inf.
SaliencyMatrix reduce_gradients(const GradientTensor& gradients, const SaliencyOptions& options = {});

/// Overflow-safe Euclidean norm.
double l2_norm(std::span<const double> v);

}  // namespace gak
