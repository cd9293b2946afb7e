#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gak/alignment.hpp"

namespace gak {

/// Ordered, non-overlapping word segments in milliseconds.
struct WordAlignment {
  std::vector<WordSegment> entries;
  std::string source_tag;
};

const std::set<std::string, std::less<>>& default_silence_tokens();

/// Parses "word start_ms end_ms" lines (tab or space separated), dropping
/// silence tokens. Throws FormatError on malformed lines, start >= end,
/// negative times, or entries that are out of order or overlap once silence
/// is removed.
WordAlignment parse_alignment(std::string_view text, std::string source_tag = {},
                              const std::set<std::string, std::less<>>& silence = default_silence_tokens());

WordAlignment load_alignment(const std::filesystem::path& path,
                             const std::set<std::string, std::less<>>& silence = default_silence_tokens());

/// "word<TAB>start_ms<TAB>end_ms" per line.
std::string format_alignment(std::span<const WordSegment> words);
void store_alignment(std::span<const WordSegment> words, const std::filesystem::path& path);

enum class MatchMode { StrictText, ByIndex };

struct WordError {
  std::string word;
  double start_ms = 0.0;
  double end_ms = 0.0;
  double center_ms = 0.0;
};

struct TseReport {
  double boundary_tse_ms = 0.0;
  double center_tse_ms = 0.0;
  std::vector<WordError> per_word;
  std::size_t n_words = 0;
  /// Sums behind the two means, kept for corpus micro-averaging.
  double boundary_sum_ms = 0.0;
  double center_sum_ms = 0.0;
};

/// Time-stamp error of hyp against ref, words matched by position.
///
/// boundary = sum(|dstart| + |dend|) / 2W, center = sum |dcenter| / W.
/// Throws SequenceMismatch on differing word counts (or zero words) and, in
/// StrictText mode, WordMismatch at the first case-insensitive text difference.
TseReport compute_tse(const WordAlignment& hyp, const WordAlignment& ref,
                      MatchMode mode = MatchMode::StrictText);

struct CorpusTseReport {
  std::vector<std::string> utterances;
  std::vector<TseReport> reports;
  /// Micro-averaged over all words of all utterances.
  double boundary_tse_ms = 0.0;
  double center_tse_ms = 0.0;
  std::size_t n_words = 0;
};

CorpusTseReport merge_reports(std::vector<std::string> utterances, std::vector<TseReport> reports);

/// Scores every *.tsv in ref_dir against the same-named file in hyp_dir on
/// up to `jobs` worker threads; results keep the sorted file order.
CorpusTseReport compute_corpus_tse(const std::filesystem::path& hyp_dir,
                                   const std::filesystem::path& ref_dir, MatchMode mode,
                                   std::size_t jobs = 0);

}  // namespace gak
