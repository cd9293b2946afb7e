#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gak/array.hpp"

namespace gak {

/// On-disk encodings understood by load_array/store_array.
///
/// Native: "GAK1", rank (u8), element kind (u8, 0 = f32, 1 = f64), shape as
/// rank little-endian u64 values, then the raw little-endian payload.
/// Npy: NPY v1.0, C order, '<f4' or '<f8' only.
enum class FileFormat { Native, Npy };

/// Format implied by a path: ".npy" selects Npy, anything else Native.
FileFormat format_for_path(const std::filesystem::path& path);

std::vector<std::byte> encode_array(const Array& array, FileFormat format);
Array decode_array(std::span<const std::byte> bytes);

Array load_array(const std::filesystem::path& path);
void store_array(const Array& array, const std::filesystem::path& path,
                 std::optional<FileFormat> format = std::nullopt);

struct ValidationReport {
  std::size_t non_finite_count = 0;
  /// Multi-index of the first NaN/Inf, if any.
  std::optional<std::vector<std::size_t>> first_non_finite;

  bool ok() const noexcept { return non_finite_count == 0; }
  std::string summary() const;
};

ValidationReport validate(const Array& array);

}  // namespace gak
