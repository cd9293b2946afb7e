#include "gak/grad_align.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gak/error.hpp"

namespace gak {

double default_blank_score(int frame_shift_ms) {
  switch (frame_shift_ms) {
    case 60: return -4.0;
    case 10: return -6.0;
    default:
      throw Error(ErrorKind::InvalidArgument, "no default blank score for a " +
                                                  std::to_string(frame_shift_ms) +
                                                  " ms frame shift; pass one explicitly");
  }
}

Matrix time_log_softmax(const Matrix& scores, std::optional<double> floor_value) {
  if (scores.rows() == 0 || scores.cols() == 0) {
    throw Error(ErrorKind::ShapeError, "score matrix is empty");
  }
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t s = 0; s < scores.rows(); ++s) {
    const auto row = scores.row(s);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (!std::isfinite(row[t])) {
        throw Error(ErrorKind::NonFiniteInput,
                    "score at (s=" + std::to_string(s) + ", t=" + std::to_string(t) + ")");
      }
    }
    if (floor_value && std::all_of(row.begin(), row.end(), [&](double v) { return v == *floor_value; })) {
      throw Error(ErrorKind::DegenerateRow, "row " + std::to_string(s) + " is entirely at the floor");
    }
    const double max = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - max);
    const double log_norm = max + std::log(sum);
    auto dst = out.row(s);
    for (std::size_t t = 0; t < row.size(); ++t) dst[t] = row[t] - log_norm;
  }
  return out;
}

AlignmentPath viterbi_align(const Matrix& scores, const LabelSequence& labels, double blank_score) {
  if (labels.empty()) throw Error(ErrorKind::EmptyLabels, "no labels to align");
  if (!std::isfinite(blank_score)) throw Error(ErrorKind::InvalidArgument, "blank score must be finite");
  if (scores.cols() < labels.size()) {
    throw Error(ErrorKind::InfeasibleLength, std::to_string(scores.cols()) + " frames for " +
                                                 std::to_string(labels.size()) + " labels");
  }
  const std::vector<double> blanks(scores.cols(), blank_score);
  return best_path(Topology::gradient(labels.size()), scores, blanks);
}

Matrix label_rows(const Matrix& scores, std::size_t num_labels) {
  if (scores.rows() == num_labels) return scores;
  if (scores.rows() == num_labels + 1) {
    Matrix out(num_labels, scores.cols());
    std::copy_n(scores.values().begin(), num_labels * scores.cols(), out.values().begin());
    return out;
  }
  throw Error(ErrorKind::ShapeError, "score matrix has " + std::to_string(scores.rows()) +
                                         " rows for " + std::to_string(num_labels) +
                                         " labels (expected S' or S'+1 with EOS)");
}

AlignmentPath align_saliency(const SaliencyMatrix& saliency, const LabelSequence& labels,
                             const GradAlignOptions& options) {
  if (labels.empty()) throw Error(ErrorKind::EmptyLabels, "no labels to align");
  const double blank = options.blank_score ? *options.blank_score : default_blank_score(saliency.frame_shift_ms);
  Matrix rows = label_rows(saliency.values, labels.size());
  if (rows.cols() < labels.size()) {
    throw Error(ErrorKind::InfeasibleLength, std::to_string(rows.cols()) + " frames for " +
                                                 std::to_string(labels.size()) + " labels");
  }
  if (!options.skip_softmax) rows = time_log_softmax(rows, saliency.floor_value);
  return viterbi_align(rows, labels, blank);
}

}  // namespace gak
