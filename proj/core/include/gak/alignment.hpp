#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gak/labels.hpp"
#include "gak/matrix.hpp"

namespace gak {

/// Blank-augmented state graph over S' labels: states (eps, 1, eps, 2, ...,
/// S', eps), 2S'+1 in total, 0-based here so even states are blanks and
/// state 2k+1 is label k.
///
/// Every path starts in state 0 or 1, ends in state 2S'-1 or 2S', and moves
/// by 0 (stay), 1 (advance) or 2 (skip) per frame. Skips are only allowed
/// out of a label state, jumping the following blank. The gradient topology
/// allows every such skip; the CTC topology forbids it between equal labels.
class Topology {
 public:
  static Topology gradient(std::size_t num_labels);
  static Topology ctc(std::span<const std::size_t> label_ids);

  std::size_t num_labels() const noexcept { return skip_allowed_.size(); }
  std::size_t num_states() const noexcept { return 2 * num_labels() + 1; }

  static bool is_blank(std::size_t state) noexcept { return state % 2 == 0; }
  static std::size_t label_of(std::size_t state) noexcept { return (state - 1) / 2; }
  static std::size_t state_of(std::size_t label) noexcept { return 2 * label + 1; }

  bool is_start(std::size_t state) const noexcept { return state <= 1; }
  bool is_end(std::size_t state) const noexcept { return state + 2 >= num_states() && state < num_states(); }
  /// Whether state -> state + 2 is a legal transition.
  bool allows_skip(std::size_t state) const noexcept;

  /// Fewest frames any accepted path needs.
  std::size_t min_frames() const noexcept;

 private:
  explicit Topology(std::vector<bool> skip_allowed) : skip_allowed_(std::move(skip_allowed)) {}

  // skip_allowed_[k]: label k may be followed directly by label k+1.
  std::vector<bool> skip_allowed_;
};

struct LabelSegment {
  std::size_t label_index = 0;
  /// Inclusive, 0-based frame range.
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;

  bool operator==(const LabelSegment&) const = default;
};

/// Best state sequence and its derived per-label segments.
struct AlignmentPath {
  std::vector<std::size_t> states;
  double score = 0.0;
  std::vector<LabelSegment> label_segments;

  std::size_t num_frames() const noexcept { return states.size(); }
  /// Label index emitted at frame t, or nullopt for blank.
  std::optional<std::size_t> frame_label(std::size_t t) const;
  std::size_t blank_frame_count() const;
};

struct WordSegment {
  std::string word;
  double start_ms = 0.0;
  double end_ms = 0.0;

  bool operator==(const WordSegment&) const = default;
};

/// Viterbi search over the topology. label_scores is S' x T (row k scores
/// label k at every frame), blank_scores has one entry per frame.
///
/// Ties between predecessors go to stay, then advance, then skip; between
/// the two end states to the final blank. Throws InfeasibleLength when no
/// path fits in T frames.
AlignmentPath best_path(const Topology& topology, const Matrix& label_scores,
                        std::span<const double> blank_scores);

/// Total score of an explicit state sequence, or nullopt if the sequence is
/// not a valid path through the topology.
std::optional<double> path_score(const Topology& topology, const Matrix& label_scores,
                                 std::span<const double> blank_scores,
                                 std::span<const std::size_t> states);

/// Contiguous runs of label states.
std::vector<LabelSegment> label_segments_of(std::span<const std::size_t> states);

/// Groups label segments into words. Frame t covers [t*shift, (t+1)*shift)
/// ms; a word spans from its first token's first frame to its last token's
/// last frame, blank frames in between included.
std::vector<WordSegment> path_to_words(const AlignmentPath& path, const LabelSequence& labels,
                                       int frame_shift_ms);

}  // namespace gak
