#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gak {

inline constexpr std::string_view kDefaultContinuationMarker = "@@";

/// Subword label sequence to align, EOS already removed.
///
/// continues_word[i] is true iff token i does not end a word. Tokens keep
/// their continuation marker; word_text() strips it.
class LabelSequence {
 public:
  LabelSequence() = default;
  LabelSequence(std::vector<std::string> tokens, std::vector<bool> continues_word,
                std::vector<std::size_t> vocab_ids = {},
                std::string marker = std::string(kDefaultContinuationMarker));

  /// Continuation flags taken from a trailing marker on each token.
  static LabelSequence from_tokens(std::vector<std::string> tokens,
                                   std::string_view marker = kDefaultContinuationMarker);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  bool continues_word(std::size_t i) const { return continues_word_.at(i); }

  bool has_vocab_ids() const noexcept { return !vocab_ids_.empty(); }
  std::size_t vocab_id(std::size_t i) const { return vocab_ids_.at(i); }
  const std::vector<std::size_t>& vocab_ids() const noexcept { return vocab_ids_; }

  /// Token text with the continuation marker removed.
  std::string word_text(std::size_t i) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<bool> continues_word_;
  std::vector<std::size_t> vocab_ids_;
  std::string marker_;
};

/// One token per line, optionally "token<TAB>vocab_id". Blank lines are
/// skipped. Either every line carries an id or none does.
LabelSequence load_labels(const std::filesystem::path& path,
                          std::string_view marker = kDefaultContinuationMarker);

void store_labels(const LabelSequence& labels, const std::filesystem::path& path);

}  // namespace gak
