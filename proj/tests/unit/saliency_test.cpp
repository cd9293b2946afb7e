#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gak/saliency.hpp"
#include "oracles.hpp"

namespace gak {
namespace {

GradientTensor tensor_of(std::size_t S, std::size_t T, std::size_t D, std::vector<double> values, int shift = 10) {
  Tensor3 t(S, T, D);
  t.values() = std::move(values);
  return {std::move(t), shift, "test"};
}

TEST(Saliency, AllOnesInFourDimsIsLnTwo) {
  const auto s = reduce_gradients(tensor_of(1, 1, 4, {1, 1, 1, 1}));
  EXPECT_NEAR(s.values(0, 0), 0.69314718055994531, 1e-15);
}

TEST(Saliency, UnitVectorIsZero) {
  const auto s = reduce_gradients(tensor_of(1, 2, 3, {0, 1, 0, 0, 0, -1}));
  EXPECT_EQ(s.values(0, 0), 0.0);
  EXPECT_EQ(s.values(0, 1), 0.0);
}

TEST(Saliency, ZeroVectorTakesTheFloor) {
  const auto s = reduce_gradients(tensor_of(1, 2, 2, {0, 0, 3, 4}));
  EXPECT_EQ(s.values(0, 0), -1e9);
  EXPECT_NEAR(s.values(0, 1), std::log(5.0), 1e-15);
  EXPECT_EQ(s.floor_value, -1e9);
  EXPECT_EQ(s.frame_shift_ms, 10);

  const auto custom = reduce_gradients(tensor_of(1, 1, 2, {0, 0}), {-500.0, false});
  EXPECT_EQ(custom.values(0, 0), -500.0);
}

TEST(Saliency, ShapeIsPreserved) {
  const auto s = reduce_gradients(tensor_of(3, 5, 2, std::vector<double>(30, 0.5), 60));
  EXPECT_EQ(s.values.rows(), 3u);
  EXPECT_EQ(s.values.cols(), 5u);
  EXPECT_EQ(s.frame_shift_ms, 60);
}

TEST(Saliency, NormDoesNotOverflowOrUnderflow) {
  const auto big = reduce_gradients(tensor_of(1, 1, 2, {1e300, 1e300}));
  EXPECT_NEAR(big.values(0, 0), std::log(1e300) + 0.5 * std::log(2.0), 1e-12);
  const auto tiny = reduce_gradients(tensor_of(1, 1, 2, {1e-300, 1e-300}));
  EXPECT_NEAR(tiny.values(0, 0), std::log(1e-300) + 0.5 * std::log(2.0), 1e-12);
}

TEST(Saliency, NonFiniteEntryIsLocated) {
  try {
    reduce_gradients(tensor_of(2, 2, 2, {0, 0, 0, 0, 0, 0, 0, std::numeric_limits<double>::quiet_NaN()}));
    FAIL() << "expected NonFiniteInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteInput);
    EXPECT_NE(std::string(e.what()).find("s=1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("t=1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("d=1"), std::string::npos) << e.what();
  }
}

TEST(Saliency, FloorAndShiftValidation) {
  EXPECT_GAK_ERROR(reduce_gradients(tensor_of(1, 1, 1, {1}), {-100.0, false}), ErrorKind::InvalidArgument);
  EXPECT_GAK_ERROR(reduce_gradients(tensor_of(1, 1, 1, {1}, 25)), ErrorKind::InvalidArgument);
  EXPECT_NO_THROW(reduce_gradients(tensor_of(1, 1, 1, {1}, 25), {kDefaultSaliencyFloor, true}));
}

// Random orthogonal D x D matrix via Gram-Schmidt.
Matrix random_rotation(std::mt19937_64& rng, std::size_t D) {
  Matrix q = testing::random_matrix(rng, D, D);
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < D; ++k) dot += q(i, k) * q(j, k);
      for (std::size_t k = 0; k < D; ++k) q(i, k) -= dot * q(j, k);
    }
    double n = 0.0;
    for (std::size_t k = 0; k < D; ++k) n += q(i, k) * q(i, k);
    for (std::size_t k = 0; k < D; ++k) q(i, k) /= std::sqrt(n);
  }
  return q;
}

TEST(Saliency, InvariantUnderRotationOfTheFeatureAxis) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t S = 3, T = 7, D = 6;
    const Matrix flat = testing::random_matrix(rng, S * T, D);
    const Matrix q = random_rotation(rng, D);
    GradientTensor a = tensor_of(S, T, D, flat.values());
    GradientTensor b = a;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < D; ++i) {
          double v = 0.0;
          for (std::size_t k = 0; k < D; ++k) v += q(i, k) * a.values(s, t, k);
          b.values(s, t, i) = v;
        }
      }
    }
    const auto sa = reduce_gradients(a);
    const auto sb = reduce_gradients(b);
    for (std::size_t i = 0; i < sa.values.values().size(); ++i) {
      const double x = sa.values.values()[i];
      EXPECT_NEAR(sb.values.values()[i], x, 1e-10 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST(Saliency, ScalingAddsLogOfTheFactor) {
  std::mt19937_64 rng(3);
  const Matrix flat = testing::random_matrix(rng, 4 * 5, 3);
  GradientTensor a = tensor_of(4, 5, 3, flat.values());
  for (std::size_t k = 0; k < 3; ++k) a.values(1, 2, k) = 0.0;
  for (double c : {0.5, 2.0, 1e3, 1e-4}) {
    GradientTensor b = a;
    for (double& v : b.values.values()) v *= c;
    const auto sa = reduce_gradients(a);
    const auto sb = reduce_gradients(b);
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t t = 0; t < 5; ++t) {
        if (s == 1 && t == 2) {
          EXPECT_EQ(sb.values(s, t), kDefaultSaliencyFloor);
        } else {
          EXPECT_NEAR(sb.values(s, t), sa.values(s, t) + std::log(c), 1e-12);
        }
      }
    }
  }
}

}  // namespace
}  // namespace gak
