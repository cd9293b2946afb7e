#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gak/array_io.hpp"
#include "gak/matrix.hpp"
#include "oracles.hpp"

namespace gak {
namespace {

using testing::TempDir;

std::vector<std::byte> as_bytes(std::initializer_list<unsigned> values) {
  std::vector<std::byte> out;
  for (unsigned v : values) out.push_back(static_cast<std::byte>(v));
  return out;
}

// np.save(np.array([[1.5, -2, 0.25], [3, 1e-3, -7]], dtype='<f4'))
const std::vector<std::byte> kNumpyF32 = as_bytes({
    0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59, 0x01, 0x00, 0x76, 0x00, 0x7b, 0x27, 0x64, 0x65, 0x73, 0x63, 0x72, 0x27, 0x3a,
    0x20, 0x27, 0x3c, 0x66, 0x34, 0x27, 0x2c, 0x20, 0x27, 0x66, 0x6f, 0x72, 0x74, 0x72, 0x61, 0x6e, 0x5f, 0x6f, 0x72,
    0x64, 0x65, 0x72, 0x27, 0x3a, 0x20, 0x46, 0x61, 0x6c, 0x73, 0x65, 0x2c, 0x20, 0x27, 0x73, 0x68, 0x61, 0x70, 0x65,
    0x27, 0x3a, 0x20, 0x28, 0x32, 0x2c, 0x20, 0x33, 0x29, 0x2c, 0x20, 0x7d, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20,
    0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20,
    0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20,
    0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20, 0x0a, 0x00, 0x00, 0xc0, 0x3f, 0x00,
    0x00, 0x00, 0xc0, 0x00, 0x00, 0x80, 0x3e, 0x00, 0x00, 0x40, 0x40, 0x6f, 0x12, 0x83, 0x3a, 0x00, 0x00, 0xe0, 0xc0});

std::vector<std::byte> native_header(std::uint8_t rank, std::uint8_t kind, std::vector<std::uint64_t> shape) {
  std::vector<std::byte> out = as_bytes({'G', 'A', 'K', '1', rank, kind});
  for (std::uint64_t d : shape) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((d >> (8 * i)) & 0xff));
  }
  return out;
}

std::vector<std::byte> npy_with_header(const std::string& dict) {
  std::string header = dict;
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::vector<std::byte> out = as_bytes({0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0});
  out.push_back(static_cast<std::byte>(header.size() & 0xff));
  out.push_back(static_cast<std::byte>(header.size() >> 8));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  for (int i = 0; i < 6 * 4; ++i) out.push_back(std::byte{0});
  return out;
}

TEST(MatrixIo, RoundTrip2x3Float64IsBitExact) {
  TempDir dir;
  const Array a({2, 3}, std::vector<double>{1.0, -0.0, 3.25, 1e-300, -7.5, 0.1});
  store_array(a, dir / "m.gak");
  EXPECT_TRUE(load_array(dir / "m.gak").bit_equal(a));
}

TEST(MatrixIo, SingleCellAndIdentityRoundTrip) {
  TempDir dir;
  const Array one({1, 1}, std::vector<double>{0.0});
  const Array eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  for (const auto* a : {&one, &eye}) {
    for (const char* name : {"a.gak", "a.npy"}) {
      store_array(*a, dir / name);
      const Array back = load_array(dir / name);
      EXPECT_EQ(back.shape(), a->shape());
      EXPECT_TRUE(back.bit_equal(*a));
    }
  }
}

TEST(MatrixIo, RandomFloat32TensorsRoundTripInBothFormats) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 10.0f);
    std::vector<float> v(5 * 7 * 3);
    for (float& x : v) x = normal(rng);
    const Array a({5, 7, 3}, v);
    for (FileFormat f : {FileFormat::Native, FileFormat::Npy}) {
      EXPECT_TRUE(decode_array(encode_array(a, f)).bit_equal(a)) << "seed " << seed;
    }
  }
}

TEST(MatrixIo, NonFiniteValuesSurviveAndAreReported) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Array a({1, 3}, std::vector<double>{1.0, nan, -std::numeric_limits<double>::infinity()});
  const Array back = decode_array(encode_array(a, FileFormat::Native));
  EXPECT_TRUE(back.bit_equal(a));
  const ValidationReport r = validate(back);
  EXPECT_EQ(r.non_finite_count, 2u);
  ASSERT_TRUE(r.first_non_finite);
  EXPECT_EQ(*r.first_non_finite, (std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(r.ok());
}

TEST(MatrixIo, StoringTwiceGivesIdenticalFiles) {
  TempDir dir;
  const Array a({2, 2, 2}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});
  store_array(a, dir / "a.gak");
  store_array(a, dir / "b.gak");
  EXPECT_EQ(testing::read_text(dir / "a.gak"), testing::read_text(dir / "b.gak"));
}

TEST(MatrixIo, NativeLayoutIsAsDocumented) {
  const Array a({1, 2}, std::vector<float>{1.0f, -2.0f});
  const auto bytes = encode_array(a, FileFormat::Native);
  auto expected = native_header(2, 0, {1, 2});
  for (float f : {1.0f, -2.0f}) {
    std::byte raw[4];
    std::memcpy(raw, &f, 4);
    expected.insert(expected.end(), raw, raw + 4);
  }
  EXPECT_EQ(bytes, expected);
}

TEST(MatrixIo, ReadsNumpyWrittenFile) {
  TempDir dir;
  {
    std::ofstream out(dir / "ref.npy", std::ios::binary);
    out.write(reinterpret_cast<const char*>(kNumpyF32.data()), static_cast<std::streamsize>(kNumpyF32.size()));
  }
  const Array a = load_array(dir / "ref.npy");
  EXPECT_EQ(a.shape(), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(a.element_kind(), ElementKind::Float32);
  const std::vector<float> expected{1.5f, -2.0f, 0.25f, 3.0f, 1e-3f, -7.0f};
  ASSERT_EQ(a.f32().size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(a.f32()[i], expected[i]);
}

TEST(MatrixIo, WritesSameBytesAsNumpy) {
  const Array a({2, 3}, std::vector<float>{1.5f, -2.0f, 0.25f, 3.0f, 1e-3f, -7.0f});
  EXPECT_EQ(encode_array(a, FileFormat::Npy), kNumpyF32);
}

TEST(MatrixIo, FormatChosenByExtension) {
  EXPECT_EQ(format_for_path("x/a.npy"), FileFormat::Npy);
  EXPECT_EQ(format_for_path("x/a.gak"), FileFormat::Native);
  EXPECT_EQ(format_for_path("noext"), FileFormat::Native);
}

TEST(MatrixIo, ZeroDimensionIsFormatError) {
  EXPECT_GAK_ERROR(decode_array(native_header(2, 1, {0, 3})), ErrorKind::FormatError);
  EXPECT_GAK_ERROR(Array({0, 3}, std::vector<double>{}), ErrorKind::FormatError);
}

TEST(MatrixIo, RankOutsideTwoOrThree) {
  EXPECT_GAK_ERROR(decode_array(native_header(1, 1, {4})), ErrorKind::UnsupportedRank);
  EXPECT_GAK_ERROR(decode_array(native_header(4, 1, {1, 1, 1, 1})), ErrorKind::UnsupportedRank);
}

TEST(MatrixIo, TruncatedAndOversizedPayloads) {
  auto bytes = encode_array(Array({2, 2}, std::vector<double>{1, 2, 3, 4}), FileFormat::Native);
  auto shorter = bytes;
  shorter.resize(bytes.size() - 1);
  EXPECT_GAK_ERROR(decode_array(shorter), ErrorKind::TruncationError);
  auto longer = bytes;
  longer.push_back(std::byte{0});
  EXPECT_GAK_ERROR(decode_array(longer), ErrorKind::FormatError);
  auto header_only = bytes;
  header_only.resize(9);
  EXPECT_GAK_ERROR(decode_array(header_only), ErrorKind::FormatError);
}

TEST(MatrixIo, MalformedHeaders) {
  EXPECT_GAK_ERROR(decode_array(as_bytes({'N', 'O', 'P', 'E', 2, 1})), ErrorKind::FormatError);
  EXPECT_GAK_ERROR(decode_array(native_header(2, 7, {1, 1})), ErrorKind::FormatError);
  EXPECT_GAK_ERROR(decode_array({}), ErrorKind::FormatError);
}

TEST(MatrixIo, NpyVariantsOutsideTheSubsetAreUnsupported) {
  EXPECT_GAK_ERROR(decode_array(npy_with_header("{'descr': '<f4', 'fortran_order': True, 'shape': (2, 3), }")),
                   ErrorKind::UnsupportedFormat);
  EXPECT_GAK_ERROR(decode_array(npy_with_header("{'descr': '<i4', 'fortran_order': False, 'shape': (2, 3), }")),
                   ErrorKind::UnsupportedFormat);
  EXPECT_GAK_ERROR(decode_array(npy_with_header("{'descr': '>f4', 'fortran_order': False, 'shape': (2, 3), }")),
                   ErrorKind::UnsupportedFormat);
  EXPECT_GAK_ERROR(decode_array(npy_with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (6,), }")),
                   ErrorKind::UnsupportedRank);
  auto v2 = npy_with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }");
  v2[6] = std::byte{2};
  EXPECT_GAK_ERROR(decode_array(v2), ErrorKind::UnsupportedFormat);
}

TEST(MatrixIo, MissingFileAndUnwritablePathAreIoErrors) {
  TempDir dir;
  EXPECT_GAK_ERROR(load_array(dir / "absent.gak"), ErrorKind::IoError);
  EXPECT_GAK_ERROR(store_array(Array({1, 1}, std::vector<double>{1}), dir / "no" / "such" / "dir.gak"),
                   ErrorKind::IoError);
}

TEST(MatrixIo, MatrixAndTensorConversions) {
  const Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(Matrix::from_array(m.to_array()), m);
  EXPECT_EQ(Matrix::from_array(m.to_array(ElementKind::Float32)), m);
  EXPECT_EQ(m.transposed()(2, 1), 6.0);
  Tensor3 t(2, 2, 2);
  t(1, 0, 1) = 3.5;
  EXPECT_EQ(Tensor3::from_array(t.to_array()), t);
  EXPECT_GAK_ERROR(Matrix::from_array(t.to_array()), ErrorKind::ShapeError);
  EXPECT_GAK_ERROR(Tensor3::from_array(m.to_array()), ErrorKind::ShapeError);
}

}  // namespace
}  // namespace gak
