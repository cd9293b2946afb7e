#include "gak/labels.hpp"

#include <charconv>
#include <fstream>

#include "gak/error.hpp"

namespace gak {

LabelSequence::LabelSequence(std::vector<std::string> tokens, std::vector<bool> continues_word,
                             std::vector<std::size_t> vocab_ids, std::string marker)
    : tokens_(std::move(tokens)),
      continues_word_(std::move(continues_word)),
      vocab_ids_(std::move(vocab_ids)),
      marker_(std::move(marker)) {
  if (tokens_.empty()) throw Error(ErrorKind::EmptyLabels, "label sequence is empty");
  if (continues_word_.size() != tokens_.size()) {
    throw Error(ErrorKind::ShapeError, "one continuation flag per token required");
  }
  if (!vocab_ids_.empty() && vocab_ids_.size() != tokens_.size()) {
    throw Error(ErrorKind::ShapeError, "one vocab id per token required");
  }
  if (continues_word_.back()) {
    throw Error(ErrorKind::FormatError, "last token '" + tokens_.back() + "' does not end a word");
  }
}

LabelSequence LabelSequence::from_tokens(std::vector<std::string> tokens, std::string_view marker) {
  std::vector<bool> continues;
  continues.reserve(tokens.size());
  for (const auto& t : tokens) {
    continues.push_back(!marker.empty() && t.size() > marker.size() && t.ends_with(marker));
  }
  return LabelSequence(std::move(tokens), std::move(continues), {}, std::string(marker));
}

std::string LabelSequence::word_text(std::size_t i) const {
  const std::string& t = tokens_.at(i);
  if (continues_word_[i] && !marker_.empty() && t.ends_with(marker_)) {
    return t.substr(0, t.size() - marker_.size());
  }
  return t;
}

LabelSequence load_labels(const std::filesystem::path& path, std::string_view marker) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());

  std::vector<std::string> tokens;
  std::vector<std::size_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    std::string token = line.substr(0, tab);
    if (tab != std::string::npos) {
      const std::string id_text = line.substr(tab + 1);
      std::size_t id = 0;
      const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
        throw Error(ErrorKind::FormatError,
                    path.string() + ":" + std::to_string(line_no) + ": bad vocab id '" + id_text + "'");
      }
      ids.push_back(id);
    }
    if (ids.size() != 0 && ids.size() != tokens.size() + 1) {
      throw Error(ErrorKind::FormatError,
                  path.string() + ":" + std::to_string(line_no) + ": vocab ids on some lines only");
    }
    tokens.push_back(std::move(token));
  }
  if (!ids.empty() && ids.size() != tokens.size()) {
    throw Error(ErrorKind::FormatError, path.string() + ": vocab ids on some lines only");
  }
  if (tokens.empty()) throw Error(ErrorKind::EmptyLabels, path.string() + " holds no tokens");

  auto seq = LabelSequence::from_tokens(std::move(tokens), marker);
  if (ids.empty()) return seq;
  std::vector<bool> flags;
  for (std::size_t i = 0; i < seq.size(); ++i) flags.push_back(seq.continues_word(i));
  return LabelSequence(seq.tokens(), std::move(flags), std::move(ids), std::string(marker));
}

void store_labels(const LabelSequence& labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels.token(i);
    if (labels.has_vocab_ids()) out << '\t' << labels.vocab_id(i);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace gak
