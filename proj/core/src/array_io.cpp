#include "gak/array_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include "gak/error.hpp"
#include "gak/log.hpp"

namespace gak {
namespace {

constexpr std::string_view kNativeMagic = "GAK1";
constexpr std::string_view kNpyMagic = "\x93NUMPY";
constexpr std::size_t kNpyAlign = 64;

std::size_t element_size(ElementKind kind) { return kind == ElementKind::Float32 ? 4 : 8; }

template <typename T>
void append_le(std::vector<std::byte>& out, T value) {
  std::byte raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T read(const char* what) {
    if (remaining() < sizeof(T)) {
      throw Error(ErrorKind::FormatError, std::string("header ends inside ") + what);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view read_text(std::size_t n) {
    if (remaining() < n) throw Error(ErrorKind::FormatError, "header ends early");
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::span<const std::byte> rest() const { return bytes_.subspan(pos_); }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

void check_rank_and_shape(const std::vector<std::size_t>& shape) {
  if (shape.size() != 2 && shape.size() != 3) {
    throw Error(ErrorKind::UnsupportedRank,
                "rank " + std::to_string(shape.size()) + " (expected 2 or 3)");
  }
  for (std::size_t d : shape) {
    if (d == 0) throw Error(ErrorKind::FormatError, "zero-length dimension in shape");
  }
}

Array make_array(std::vector<std::size_t> shape, ElementKind kind,
                 std::span<const std::byte> payload) {
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  const std::size_t need = count * element_size(kind);
  if (payload.size() < need) {
    throw Error(ErrorKind::TruncationError, "payload has " + std::to_string(payload.size()) +
                                                " bytes, shape needs " + std::to_string(need));
  }
  if (payload.size() > need) {
    throw Error(ErrorKind::FormatError,
                std::to_string(payload.size() - need) + " trailing bytes after payload");
  }
  if (kind == ElementKind::Float32) {
    std::vector<float> v(count);
    std::memcpy(v.data(), payload.data(), need);
    return Array(std::move(shape), std::move(v));
  }
  std::vector<double> v(count);
  std::memcpy(v.data(), payload.data(), need);
  return Array(std::move(shape), std::move(v));
}

Array decode_native(Reader& in) {
  const auto rank = in.read<std::uint8_t>("rank");
  const auto kind_byte = in.read<std::uint8_t>("element kind");
  if (kind_byte > 1) {
    throw Error(ErrorKind::FormatError, "unknown element kind " + std::to_string(kind_byte));
  }
  if (rank != 2 && rank != 3) {
    throw Error(ErrorKind::UnsupportedRank,
                "rank " + std::to_string(rank) + " (expected 2 or 3)");
  }
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(in.read<std::uint64_t>("shape"));
  check_rank_and_shape(shape);
  return make_array(std::move(shape), static_cast<ElementKind>(kind_byte), in.rest());
}

// Value text following 'key': inside an NPY header dict.
std::string_view npy_field(std::string_view header, std::string_view key) {
  const std::string quoted = "'" + std::string(key) + "'";
  auto pos = header.find(quoted);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::FormatError, "NPY header lacks '" + std::string(key) + "'");
  }
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY header malformed");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  return header.substr(pos);
}

std::vector<std::size_t> parse_npy_shape(std::string_view text) {
  if (text.empty() || text.front() != '(') throw Error(ErrorKind::FormatError, "NPY shape malformed");
  const auto close = text.find(')');
  if (close == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY shape malformed");
  std::vector<std::size_t> shape;
  std::string_view body = text.substr(1, close - 1);
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && (body[i] == ' ' || body[i] == ',')) ++i;
    if (i >= body.size()) break;
    std::size_t value = 0;
    std::size_t digits = 0;
    while (i < body.size() && body[i] >= '0' && body[i] <= '9') {
      value = value * 10 + static_cast<std::size_t>(body[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorKind::FormatError, "NPY shape malformed");
    shape.push_back(value);
  }
  return shape;
}

Array decode_npy(Reader& in) {
  const auto major = in.read<std::uint8_t>("version");
  const auto minor = in.read<std::uint8_t>("version");
  if (major != 1 || minor != 0) {
    throw Error(ErrorKind::UnsupportedFormat, "NPY version " + std::to_string(major) + "." +
                                                  std::to_string(minor) + " (only 1.0)");
  }
  const auto header_len = in.read<std::uint16_t>("header length");
  const std::string_view header = in.read_text(header_len);
  if (header.empty() || header.front() != '{' || header.find('}') == std::string_view::npos) {
    throw Error(ErrorKind::FormatError, "NPY header is not a dict");
  }

  const std::string_view descr = npy_field(header, "descr");
  ElementKind kind;
  if (descr.starts_with("'<f4'")) {
    kind = ElementKind::Float32;
  } else if (descr.starts_with("'<f8'")) {
    kind = ElementKind::Float64;
  } else {
    const auto end = descr.find(',');
    throw Error(ErrorKind::UnsupportedFormat, "dtype " + std::string(descr.substr(0, end)));
  }

  const std::string_view fortran = npy_field(header, "fortran_order");
  if (fortran.starts_with("True")) {
    throw Error(ErrorKind::UnsupportedFormat, "Fortran-order arrays are not supported");
  }
  if (!fortran.starts_with("False")) throw Error(ErrorKind::FormatError, "NPY fortran_order malformed");

  auto shape = parse_npy_shape(npy_field(header, "shape"));
  check_rank_and_shape(shape);
  return make_array(std::move(shape), kind, in.rest());
}

std::vector<std::byte> encode_native(const Array& array) {
  std::vector<std::byte> out;
  for (char c : kNativeMagic) out.push_back(static_cast<std::byte>(c));
  append_le(out, static_cast<std::uint8_t>(array.rank()));
  append_le(out, static_cast<std::uint8_t>(array.element_kind()));
  for (std::size_t d : array.shape()) append_le(out, static_cast<std::uint64_t>(d));
  const auto payload = array.bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::byte> encode_npy(const Array& array) {
  std::ostringstream dict;
  dict << "{'descr': '" << (array.element_kind() == ElementKind::Float32 ? "<f4" : "<f8")
       << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < array.rank(); ++i) {
    if (i) dict << ", ";
    dict << array.shape()[i];
  }
  dict << "), }";
  std::string header = dict.str();
  // magic(6) + version(2) + length(2) + header + '\n' is padded to kNpyAlign.
  const std::size_t unpadded = kNpyMagic.size() + 4 + header.size() + 1;
  header.append((kNpyAlign - unpadded % kNpyAlign) % kNpyAlign, ' ');
  header.push_back('\n');

  std::vector<std::byte> out;
  for (char c : kNpyMagic) out.push_back(static_cast<std::byte>(c));
  append_le(out, std::uint8_t{1});
  append_le(out, std::uint8_t{0});
  append_le(out, static_cast<std::uint16_t>(header.size()));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  const auto payload = array.bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

bool has_prefix(std::span<const std::byte> bytes, std::string_view magic) {
  return bytes.size() >= magic.size() &&
         std::memcmp(bytes.data(), magic.data(), magic.size()) == 0;
}

}  // namespace

FileFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".npy" ? FileFormat::Npy : FileFormat::Native;
}

std::vector<std::byte> encode_array(const Array& array, FileFormat format) {
  return format == FileFormat::Npy ? encode_npy(array) : encode_native(array);
}

Array decode_array(std::span<const std::byte> bytes) {
  Reader in(bytes);
  if (has_prefix(bytes, kNativeMagic)) {
    in.read_text(kNativeMagic.size());
    return decode_native(in);
  }
  if (has_prefix(bytes, kNpyMagic)) {
    in.read_text(kNpyMagic.size());
    return decode_npy(in);
  }
  throw Error(ErrorKind::FormatError, "unrecognized magic bytes");
}

Array load_array(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::vector<char> raw((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (file.bad()) throw Error(ErrorKind::IoError, "read failed: " + path.string());

  try {
    Array array = decode_array(std::as_bytes(std::span(raw)));
    if (const auto report = validate(array); !report.ok()) {
      log().warn("{}: {}", path.string(), report.summary());
    }
    return array;
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

void store_array(const Array& array, const std::filesystem::path& path,
                 std::optional<FileFormat> format) {
  const auto bytes = encode_array(array, format.value_or(format_for_path(path)));
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

std::string ValidationReport::summary() const {
  if (ok()) return "all values finite";
  std::ostringstream s;
  s << non_finite_count << " non-finite value(s), first at (";
  for (std::size_t i = 0; i < first_non_finite->size(); ++i) {
    if (i) s << ", ";
    s << (*first_non_finite)[i];
  }
  s << ")";
  return s.str();
}

ValidationReport validate(const Array& array) {
  ValidationReport report;
  const std::size_t n = array.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(array.value(i))) continue;
    if (report.non_finite_count++ == 0) {
      std::vector<std::size_t> index(array.rank());
      std::size_t rem = i;
      for (std::size_t d = array.rank(); d-- > 0;) {
        index[d] = rem % array.shape()[d];
        rem /= array.shape()[d];
      }
      report.first_non_finite = std::move(index);
    }
  }
  return report;
}

}  // namespace gak
