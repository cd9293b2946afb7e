#include "gak/array.hpp"

#include <bit>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>

#include "gak/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "payloads are stored little-endian and copied verbatim");

namespace gak {

std::size_t ArrayHeader::element_count() const noexcept {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Array::Array(std::vector<std::size_t> shape, std::vector<float> values)
    : header_{std::move(shape), ElementKind::Float32}, data_(std::move(values)) {
  check_shape();
}

Array::Array(std::vector<std::size_t> shape, std::vector<double> values)
    : header_{std::move(shape), ElementKind::Float64}, data_(std::move(values)) {
  check_shape();
}

void Array::check_shape() const {
  if (header_.rank() != 2 && header_.rank() != 3) {
    throw Error(ErrorKind::UnsupportedRank,
                "rank " + std::to_string(header_.rank()) + " (expected 2 or 3)");
  }
  for (std::size_t d : header_.shape) {
    if (d == 0) throw Error(ErrorKind::FormatError, "zero-length dimension");
  }
  const std::size_t stored = std::visit([](const auto& v) { return v.size(); }, data_);
  if (stored != header_.element_count()) {
    throw Error(ErrorKind::FormatError, "shape implies " + std::to_string(header_.element_count()) +
                                            " elements but " + std::to_string(stored) + " given");
  }
}

double Array::value(std::size_t flat_index) const {
  return std::visit([&](const auto& v) { return static_cast<double>(v.at(flat_index)); }, data_);
}

std::span<const float> Array::f32() const {
  if (const auto* v = std::get_if<std::vector<float>>(&data_)) return *v;
  throw Error(ErrorKind::InvalidArgument, "array holds float64, not float32");
}

std::span<const double> Array::f64() const {
  if (const auto* v = std::get_if<std::vector<double>>(&data_)) return *v;
  throw Error(ErrorKind::InvalidArgument, "array holds float32, not float64");
}

std::vector<double> Array::to_f64() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data_);
}

std::span<const std::byte> Array::bytes() const noexcept {
  return std::visit([](const auto& v) { return std::as_bytes(std::span(v)); }, data_);
}

bool Array::bit_equal(const Array& other) const noexcept {
  if (header_ != other.header_) return false;
  const auto a = bytes();
  const auto b = other.bytes();
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace gak
