#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "gak/matrix.hpp"

namespace gak {

enum class AttentionKind { Cross, Self };

enum class Verdict { ForwardMonotonic, TimeReversed, NonMonotonic };

std::string_view to_string(Verdict verdict) noexcept;

inline constexpr double kDefaultTauThreshold = 0.8;
inline constexpr double kDefaultBandFraction = 0.05;

struct MonotonicityReport {
  std::vector<std::size_t> argmax_frames;
  double kendall_tau = 0.0;
  Verdict verdict = Verdict::NonMonotonic;
  double threshold = kDefaultTauThreshold;
  /// Rows whose values are all equal (first frame taken).
  std::vector<std::size_t> ambiguous_rows;
  double max_row_sum_error = 0.0;
};

/// Kendall tau-a over all row pairs; equal values contribute zero.
double kendall_tau_a(std::span<const std::size_t> values);

/// Classifies the per-row argmax path of an S x T cross-attention matrix:
/// tau >= threshold is forward, tau <= -threshold reversed.
///
/// Needs S >= 2 (ShapeError otherwise). Rows not summing to 1 within 1e-6
/// and ambiguous argmaxes only produce warnings.
MonotonicityReport monotonicity(const Matrix& cross_attention, double threshold = kDefaultTauThreshold);

enum class SelfAttentionValues { Weights, Energies };

struct ReversalReport {
  double score = 0.0;
  double diagonal_mass = 0.0;
  double anti_diagonal_mass = 0.0;
  std::size_t band = 1;
};

/// Band half-width in cells for a T x T matrix: max(1, ceil(band_frac * T)).
/// A band of b covers offsets strictly below b, so b = 1 is the bare diagonal.
std::size_t band_width(std::size_t frames, double band_frac);

/// Anti-diagonal minus main-diagonal share of the attention mass, in
/// [-1, 1]. Cells in both bands count towards both. Energies are row-softmaxed
/// first; weights must be non-negative and are normalized to unit total.
ReversalReport reversal_report(const Matrix& self_attention, double band_frac = kDefaultBandFraction,
                               SelfAttentionValues values = SelfAttentionValues::Weights);

inline double reversal_score(const Matrix& self_attention, double band_frac = kDefaultBandFraction,
                             SelfAttentionValues values = SelfAttentionValues::Weights) {
  return reversal_report(self_attention, band_frac, values).score;
}

/// Copy with the column (time) order reversed.
Matrix reverse_columns(const Matrix& m);

}  // namespace gak
