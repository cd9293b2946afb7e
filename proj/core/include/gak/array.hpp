#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace gak {

enum class ElementKind : std::uint8_t { Float32 = 0, Float64 = 1 };

struct ArrayHeader {
  std::vector<std::size_t> shape;
  ElementKind element_kind = ElementKind::Float64;

  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t element_count() const noexcept;

  bool operator==(const ArrayHeader&) const = default;
};

/// A rank-2 or rank-3 array held in its on-disk element kind, row-major.
///
/// Values are never converted on the way in or out of a file, so a
/// load/store round trip reproduces the payload bit for bit. Use Matrix or
/// Tensor3 (matrix.hpp) for arithmetic.
class Array {
 public:
  Array(std::vector<std::size_t> shape, std::vector<float> values);
  Array(std::vector<std::size_t> shape, std::vector<double> values);

  const ArrayHeader& header() const noexcept { return header_; }
  const std::vector<std::size_t>& shape() const noexcept { return header_.shape; }
  std::size_t rank() const noexcept { return header_.rank(); }
  ElementKind element_kind() const noexcept { return header_.element_kind; }
  std::size_t size() const noexcept { return header_.element_count(); }

  /// Value at a flat row-major index, widened to double.
  double value(std::size_t flat_index) const;

  std::span<const float> f32() const;
  std::span<const double> f64() const;
  std::vector<double> to_f64() const;

  /// Raw little-endian payload bytes.
  std::span<const std::byte> bytes() const noexcept;

  /// Same header and identical payload bytes (NaN payloads included).
  bool bit_equal(const Array& other) const noexcept;

 private:
  void check_shape() const;

  ArrayHeader header_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

}  // namespace gak
