#include "gak/tse.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "gak/error.hpp"

namespace gak {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

const std::set<std::string, std::less<>>& default_silence_tokens() {
  static const std::set<std::string, std::less<>> tokens{"<sil>", "[SILENCE]"};
  return tokens;
}

WordAlignment parse_alignment(std::string_view text, std::string source_tag,
                              const std::set<std::string, std::less<>>& silence) {
  WordAlignment out{{}, std::move(source_tag)};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  const auto where = [&] {
    return (out.source_tag.empty() ? std::string("line ") : out.source_tag + ":") + std::to_string(line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    double start = 0.0;
    double end = 0.0;
    std::string extra;
    if (!(fields >> start >> end) || (fields >> extra)) {
      throw Error(ErrorKind::FormatError, where() + ": expected 'word start_ms end_ms'");
    }
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(start < end)) {
      throw Error(ErrorKind::FormatError, where() + ": need 0 <= start < end");
    }
    if (silence.contains(word)) continue;
    if (!out.entries.empty() && start < out.entries.back().end_ms) {
      throw Error(ErrorKind::FormatError, where() + ": '" + word + "' starts before '" +
                                              out.entries.back().word + "' ends");
    }
    out.entries.push_back({std::move(word), start, end});
  }
  return out;
}

WordAlignment load_alignment(const std::filesystem::path& path,
                             const std::set<std::string, std::less<>>& silence) {
  return parse_alignment(read_file(path), path.string(), silence);
}

std::string format_alignment(std::span<const WordSegment> words) {
  std::string out;
  for (const auto& w : words) out += fmt::format("{}\t{}\t{}\n", w.word, w.start_ms, w.end_ms);
  return out;
}

void store_alignment(std::span<const WordSegment> words, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << format_alignment(words);
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

TseReport compute_tse(const WordAlignment& hyp, const WordAlignment& ref, MatchMode mode) {
  const std::size_t n = ref.entries.size();
  if (hyp.entries.size() != n) {
    throw Error(ErrorKind::SequenceMismatch, "hypothesis has " + std::to_string(hyp.entries.size()) +
                                                 " words, reference " + std::to_string(n));
  }
  if (n == 0) throw Error(ErrorKind::SequenceMismatch, "no words to compare");

  TseReport report;
  report.n_words = n;
  report.per_word.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WordSegment& h = hyp.entries[i];
    const WordSegment& r = ref.entries[i];
    if (mode == MatchMode::StrictText && lowercase(h.word) != lowercase(r.word)) {
      throw Error(ErrorKind::WordMismatch, "word " + std::to_string(i) + ": hypothesis '" + h.word +
                                               "' vs reference '" + r.word + "'");
    }
    WordError e{r.word, std::abs(h.start_ms - r.start_ms), std::abs(h.end_ms - r.end_ms),
                std::abs((h.start_ms + h.end_ms) / 2.0 - (r.start_ms + r.end_ms) / 2.0)};
    report.boundary_sum_ms += e.start_ms + e.end_ms;
    report.center_sum_ms += e.center_ms;
    report.per_word.push_back(std::move(e));
  }
  report.boundary_tse_ms = report.boundary_sum_ms / (2.0 * static_cast<double>(n));
  report.center_tse_ms = report.center_sum_ms / static_cast<double>(n);
  return report;
}

CorpusTseReport merge_reports(std::vector<std::string> utterances, std::vector<TseReport> reports) {
  CorpusTseReport corpus;
  double boundary = 0.0;
  double center = 0.0;
  for (const auto& r : reports) {
    boundary += r.boundary_sum_ms;
    center += r.center_sum_ms;
    corpus.n_words += r.n_words;
  }
  if (corpus.n_words > 0) {
    corpus.boundary_tse_ms = boundary / (2.0 * static_cast<double>(corpus.n_words));
    corpus.center_tse_ms = center / static_cast<double>(corpus.n_words);
  }
  corpus.utterances = std::move(utterances);
  corpus.reports = std::move(reports);
  return corpus;
}

CorpusTseReport compute_corpus_tse(const std::filesystem::path& hyp_dir,
                                   const std::filesystem::path& ref_dir, MatchMode mode,
                                   std::size_t jobs) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(ref_dir)) throw Error(ErrorKind::IoError, ref_dir.string() + " is not a directory");
  if (!fs::is_directory(hyp_dir)) throw Error(ErrorKind::IoError, hyp_dir.string() + " is not a directory");

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(ref_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw Error(ErrorKind::IoError, "no .tsv references in " + ref_dir.string());

  std::vector<TseReport> reports(names.size());
  std::vector<std::exception_ptr> failures(names.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < names.size(); i = next++) {
      try {
        const fs::path hyp_path = hyp_dir / names[i];
        if (!fs::exists(hyp_path)) throw Error(ErrorKind::IoError, "missing hypothesis " + hyp_path.string());
        reports[i] = compute_tse(load_alignment(hyp_path), load_alignment(ref_dir / names[i]), mode);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, names.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return merge_reports(std::move(names), std::move(reports));
}

}  // namespace gak
