#pragma once

#include <optional>

#include "gak/alignment.hpp"
#include "gak/labels.hpp"
#include "gak/matrix.hpp"
#include "gak/saliency.hpp"

namespace gak {

/// Blank score for a frame shift: -4 at 60 ms, -6 at 10 ms. Other shifts
/// have no default and throw InvalidArgument.
double default_blank_score(int frame_shift_ms);

/// Row-wise log-softmax over the time axis.
///
/// Throws DegenerateRow when every entry of a row equals floor_value (pass
/// nullopt to skip that check) and NonFiniteInput on NaN or Inf.
Matrix time_log_softmax(const Matrix& scores, std::optional<double> floor_value = std::nullopt);

inline Matrix time_log_softmax(const SaliencyMatrix& saliency) {
  return time_log_softmax(saliency.values, saliency.floor_value);
}

/// Forced alignment of labels to the S' x T score matrix on the gradient
/// topology: label states score scores[label, t], blank states score
/// blank_score. Equal neighbouring labels need no blank between them.
AlignmentPath viterbi_align(const Matrix& scores, const LabelSequence& labels, double blank_score);

struct GradAlignOptions {
  /// Defaults to default_blank_score(frame shift).
  std::optional<double> blank_score;
  /// Align the matrix as given instead of time-log-softmaxing it first.
  bool skip_softmax = false;
};

/// Full alignment from a saliency matrix: drops the trailing EOS row when
/// the matrix has S'+1 rows, normalizes over time and runs viterbi_align.
AlignmentPath align_saliency(const SaliencyMatrix& saliency, const LabelSequence& labels,
                             const GradAlignOptions& options = {});

/// Saliency rows that belong to real labels: all rows when there are
/// exactly num_labels, all but the last when there is one more (EOS).
Matrix label_rows(const Matrix& scores, std::size_t num_labels);

}  // namespace gak
