#pragma once

#include "gak/alignment.hpp"
#include "gak/labels.hpp"
#include "gak/matrix.hpp"

namespace gak {

inline constexpr std::size_t kCtcBlankIndex = 0;

/// T x V frame log-posteriors; column kCtcBlankIndex is blank.
struct PosteriorMatrix {
  Matrix log_probs;
  int frame_shift_ms = 60;
};

/// Largest |logsumexp(row)| over all frames; 0 for normalized posteriors.
double max_row_normalization_error(const Matrix& log_probs);

/// Best path under the standard CTC topology, which requires a blank
/// between equal neighbouring labels. Labels must carry vocab ids.
///
/// Logs a warning when rows are not normalized to within 1e-6. Throws
/// VocabError for ids >= V or a blank id, InfeasibleLength when T is too short.
AlignmentPath ctc_viterbi_align(const PosteriorMatrix& posteriors, const LabelSequence& labels);

}  // namespace gak
