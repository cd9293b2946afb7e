#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gak/matrix.hpp"

namespace gak::testing {

struct BruteForcePath {
  std::vector<std::size_t> states;
  double score = 0.0;
};

/// Best path over every state sequence allowed on the gradient topology,
/// enumerated from the rules directly: states 0..2S', start in {0,1}, end in
/// {2S'-1, 2S'}, steps of 0, 1 or 2 with 2 only out of an odd (label) state.
/// Ties go to the sequence with the higher state at the latest frame where
/// the candidates differ. nullopt when no path fits.
std::optional<BruteForcePath> brute_force_gradient(const Matrix& label_scores, std::span<const double> blank_scores);

/// Best CTC path found by enumerating every frame labelling over
/// {blank} + vocabulary whose collapse (merge repeats, drop blanks) equals
/// label_ids. log_probs is T x V with blank at column 0. The returned states
/// use the same numbering as the gradient topology.
std::optional<BruteForcePath> brute_force_ctc(const Matrix& log_probs, std::span<const std::size_t> label_ids);

/// Matrix of independent N(0, scale) entries.
Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0);

/// Unique empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gak::testing
