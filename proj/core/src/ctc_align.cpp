#include "gak/ctc_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gak/error.hpp"
#include "gak/log.hpp"

namespace gak {

double max_row_normalization_error(const Matrix& log_probs) {
  double worst = 0.0;
  for (std::size_t t = 0; t < log_probs.rows(); ++t) {
    const auto row = log_probs.row(t);
    const double max = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - max);
    worst = std::max(worst, std::abs(max + std::log(sum)));
  }
  return worst;
}

AlignmentPath ctc_viterbi_align(const PosteriorMatrix& posteriors, const LabelSequence& labels) {
  if (labels.empty()) throw Error(ErrorKind::EmptyLabels, "no labels to align");
  if (!labels.has_vocab_ids()) {
    throw Error(ErrorKind::VocabError, "CTC alignment needs vocab ids for every label");
  }
  const Matrix& lp = posteriors.log_probs;
  const std::size_t T = lp.rows();
  const std::size_t V = lp.cols();
  if (T == 0 || V == 0) throw Error(ErrorKind::ShapeError, "posterior matrix is empty");
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const std::size_t id = labels.vocab_id(k);
    if (id >= V || id == kCtcBlankIndex) {
      throw Error(ErrorKind::VocabError, "label " + std::to_string(k) + " ('" + labels.token(k) +
                                             "') has id " + std::to_string(id) + " outside 1.." +
                                             std::to_string(V - 1));
    }
  }
  for (double v : lp.values()) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorKind::NonFiniteInput, "posterior matrix holds NaN or +Inf");
    }
  }
  if (const double err = max_row_normalization_error(lp); err > 1e-6) {
    log().warn("posterior rows are not normalized (max |logsumexp| = {:.3g})", err);
  }

  const Topology topology = Topology::ctc(labels.vocab_ids());
  if (T < topology.min_frames()) {
    throw Error(ErrorKind::InfeasibleLength, std::to_string(T) + " frames, CTC needs at least " +
                                                 std::to_string(topology.min_frames()));
  }
  Matrix label_scores(labels.size(), T);
  std::vector<double> blanks(T);
  for (std::size_t t = 0; t < T; ++t) {
    blanks[t] = lp(t, kCtcBlankIndex);
    for (std::size_t k = 0; k < labels.size(); ++k) label_scores(k, t) = lp(t, labels.vocab_id(k));
  }
  return best_path(topology, label_scores, blanks);
}

}  // namespace gak
