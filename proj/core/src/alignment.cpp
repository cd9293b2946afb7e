#include "gak/alignment.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "gak/error.hpp"

namespace gak {

Topology Topology::gradient(std::size_t num_labels) {
  if (num_labels == 0) throw Error(ErrorKind::EmptyLabels, "no labels to align");
  return Topology(std::vector<bool>(num_labels, true));
}

Topology Topology::ctc(std::span<const std::size_t> label_ids) {
  if (label_ids.empty()) throw Error(ErrorKind::EmptyLabels, "no labels to align");
  std::vector<bool> skip(label_ids.size(), true);
  for (std::size_t k = 0; k + 1 < label_ids.size(); ++k) skip[k] = label_ids[k] != label_ids[k + 1];
  return Topology(std::move(skip));
}

bool Topology::allows_skip(std::size_t state) const noexcept {
  if (is_blank(state)) return false;
  const std::size_t k = label_of(state);
  return k + 1 < num_labels() && skip_allowed_[k];
}

std::size_t Topology::min_frames() const noexcept {
  std::size_t n = num_labels();
  for (std::size_t k = 0; k + 1 < num_labels(); ++k) n += skip_allowed_[k] ? 0 : 1;
  return n;
}

std::optional<std::size_t> AlignmentPath::frame_label(std::size_t t) const {
  const std::size_t r = states.at(t);
  if (Topology::is_blank(r)) return std::nullopt;
  return Topology::label_of(r);
}

std::size_t AlignmentPath::blank_frame_count() const {
  std::size_t n = 0;
  for (std::size_t r : states) n += Topology::is_blank(r) ? 1 : 0;
  return n;
}

namespace {

enum Step : std::uint8_t { kStay = 0, kAdvance = 1, kSkip = 2 };

double emission(const Matrix& label_scores, std::span<const double> blank_scores, std::size_t state,
                std::size_t t) {
  return Topology::is_blank(state) ? blank_scores[t] : label_scores(Topology::label_of(state), t);
}

void check_inputs(const Topology& topology, const Matrix& label_scores,
                  std::span<const double> blank_scores) {
  if (label_scores.rows() != topology.num_labels()) {
    throw Error(ErrorKind::ShapeError, "score matrix has " + std::to_string(label_scores.rows()) +
                                           " rows for " + std::to_string(topology.num_labels()) +
                                           " labels");
  }
  if (blank_scores.size() != label_scores.cols()) {
    throw Error(ErrorKind::ShapeError, "one blank score per frame required");
  }
}

}  // namespace

AlignmentPath best_path(const Topology& topology, const Matrix& label_scores,
                        std::span<const double> blank_scores) {
  check_inputs(topology, label_scores, blank_scores);
  const std::size_t T = label_scores.cols();
  const std::size_t N = topology.num_states();
  if (T < topology.min_frames()) {
    throw Error(ErrorKind::InfeasibleLength, std::to_string(T) + " frames for " +
                                                 std::to_string(topology.num_labels()) +
                                                 " labels (need at least " +
                                                 std::to_string(topology.min_frames()) + ")");
  }

  constexpr double kUnreachable = -std::numeric_limits<double>::infinity();
  std::vector<double> prev(N, kUnreachable);
  std::vector<double> cur(N, kUnreachable);
  std::vector<std::uint8_t> back(T * N, kStay);

  prev[0] = emission(label_scores, blank_scores, 0, 0);
  prev[1] = emission(label_scores, blank_scores, 1, 0);

  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t r = 0; r < N; ++r) {
      double best = prev[r];
      std::uint8_t step = kStay;
      if (r >= 1 && prev[r - 1] > best) {
        best = prev[r - 1];
        step = kAdvance;
      }
      if (r >= 2 && topology.allows_skip(r - 2) && prev[r - 2] > best) {
        best = prev[r - 2];
        step = kSkip;
      }
      back[t * N + r] = step;
      cur[r] = best == kUnreachable ? kUnreachable
                                    : best + emission(label_scores, blank_scores, r, t);
    }
    std::swap(prev, cur);
  }

  std::size_t state = N - 1;
  if (prev[N - 2] > prev[N - 1]) state = N - 2;
  if (prev[state] == kUnreachable) {
    throw Error(ErrorKind::InfeasibleLength, "no valid path through " + std::to_string(T) + " frames");
  }

  AlignmentPath path;
  path.score = prev[state];
  path.states.resize(T);
  for (std::size_t t = T; t-- > 0;) {
    path.states[t] = state;
    state -= back[t * N + state];
  }
  path.label_segments = label_segments_of(path.states);
  return path;
}

std::optional<double> path_score(const Topology& topology, const Matrix& label_scores,
                                 std::span<const double> blank_scores,
                                 std::span<const std::size_t> states) {
  check_inputs(topology, label_scores, blank_scores);
  if (states.size() != label_scores.cols() || states.empty()) return std::nullopt;
  if (!topology.is_start(states.front()) || !topology.is_end(states.back())) return std::nullopt;
  double score = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (states[t] >= topology.num_states()) return std::nullopt;
    if (t > 0) {
      if (states[t] < states[t - 1]) return std::nullopt;
      const std::size_t step = states[t] - states[t - 1];
      if (step > 2 || (step == 2 && !topology.allows_skip(states[t - 1]))) return std::nullopt;
    }
    score += emission(label_scores, blank_scores, states[t], t);
  }
  return score;
}

std::vector<LabelSegment> label_segments_of(std::span<const std::size_t> states) {
  std::vector<LabelSegment> segments;
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (Topology::is_blank(states[t])) continue;
    const std::size_t label = Topology::label_of(states[t]);
    if (t > 0 && states[t - 1] == states[t]) {
      segments.back().end_frame = t;
    } else {
      segments.push_back({label, t, t});
    }
  }
  return segments;
}

std::vector<WordSegment> path_to_words(const AlignmentPath& path, const LabelSequence& labels,
                                       int frame_shift_ms) {
  if (frame_shift_ms <= 0) throw Error(ErrorKind::InvalidArgument, "frame shift must be positive");
  if (path.label_segments.size() != labels.size()) {
    throw Error(ErrorKind::SequenceMismatch, "path has " + std::to_string(path.label_segments.size()) +
                                                 " label segments for " +
                                                 std::to_string(labels.size()) + " labels");
  }
  const double shift = frame_shift_ms;
  std::vector<WordSegment> words;
  bool open = false;
  for (const LabelSegment& seg : path.label_segments) {
    const std::size_t k = seg.label_index;
    if (!open) {
      words.push_back({"", static_cast<double>(seg.start_frame) * shift, 0.0});
      open = true;
    }
    WordSegment& w = words.back();
    w.word += labels.word_text(k);
    w.end_ms = static_cast<double>(seg.end_frame + 1) * shift;
    open = labels.continues_word(k);
  }
  return words;
}

}  // namespace gak
