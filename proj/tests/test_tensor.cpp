#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "gfno/tensor.hpp"
#include "support.hpp"

using namespace gfno;
using gfno::test::Gen;
using gfno::test::for_all;

namespace {

Tensor naive_contract(const Tensor& x, const Tensor& w) {
  const std::size_t co = w.shape()[0], ci = w.shape()[1], p = x.numel() / ci;
  Shape s = x.shape();
  s[0] = co;
  Tensor out(s);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t q = 0; q < p; ++q) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ci; ++i) acc += w.data()[o * ci + i] * x.data()[i * p + q];
      out.data()[o * p + q] = acc;
    }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gfno_test_" + name + ".gft");
}

}  // namespace

TEST(Contract, ScalarWeightScales) {
  const Tensor x = Tensor::real({1, 2}, {1, 2});
  const Tensor y = contract_channels(x, Tensor::real({1, 1}, {3}));
  EXPECT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_EQ(y.data()[0], 3.0);
  EXPECT_EQ(y.data()[1], 6.0);
}

TEST(Contract, IdentityWeightIsNoOp) {
  Gen g(1);
  const Tensor x = g.real({4, 3, 3});
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.data()[i * 4 + i] = 1.0;
  EXPECT_EQ(max_abs_diff(contract_channels(x, eye), x), 0.0);
}

TEST(Contract, MatchesTripleLoop) {
  Gen g(2);
  const Tensor x = g.real({3, 4, 4}), w = g.real({5, 3});
  EXPECT_LT(max_abs_diff(contract_channels(x, w), naive_contract(x, w)), 1e-12);
}

TEST(Contract, RealWeightsOnComplexInput) {
  Gen g(3);
  const Tensor x = g.complex({2, 5}), w = g.real({3, 2});
  const Tensor y = contract_channels(x, w);
  ASSERT_TRUE(y.is_complex());
  EXPECT_LT(max_abs_diff(y.real_part(), naive_contract(x.real_part(), w)), 1e-12);
  EXPECT_LT(max_abs_diff(y.imag_part(), naive_contract(x.imag_part(), w)), 1e-12);
}

TEST(Contract, MismatchNamesBothShapes) {
  try {
    contract_channels(Tensor({3, 4}), Tensor({2, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(3, 4)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(2, 2)"), std::string::npos) << msg;
  }
}

TEST(ContractProperty, Linear) {
  for_all(50, 10, [](Gen& g) {
    const std::size_t ci = g.size(1, 5), co = g.size(1, 5), n = g.size(1, 6);
    const Tensor x = g.real({ci, n, n}), y = g.real({ci, n, n}), w = g.real({co, ci});
    const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
    const Tensor lhs = contract_channels(a * x + b * y, w);
    const Tensor rhs = a * contract_channels(x, w) + b * contract_channels(y, w);
    ASSERT_LT(max_abs_diff(lhs, rhs), 1e-12);
  });
}

TEST(ContractProperty, BatchedMatchesPerItem) {
  for_all(20, 11, [](Gen& g) {
    const std::size_t b = g.size(1, 4), ci = g.size(1, 4), co = g.size(1, 4);
    const Tensor x = g.real({b, ci, 3, 2}), w = g.real({co, ci});
    const Tensor y = contract_channels_batched(x, w);
    const std::size_t in_sz = ci * 6, out_sz = co * 6;
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<double> slice(x.data().begin() + i * in_sz, x.data().begin() + (i + 1) * in_sz);
      const Tensor yi = contract_channels(Tensor::real({ci, 3, 2}, slice), w);
      for (std::size_t q = 0; q < out_sz; ++q) ASSERT_NEAR(y.data()[i * out_sz + q], yi.data()[q], 1e-14);
    }
  });
}

TEST(Gelu, ZeroIsZero) { EXPECT_EQ(gelu(0.0), 0.0); }

TEST(Gelu, SaturatesToIdentity) { EXPECT_LT(std::abs(gelu(10.0) - 10.0), 1e-6); }

TEST(Gelu, MatchesHighPrecisionErf) {
  // 0.5 x (1 + erf(x / sqrt 2)) at x = -1, evaluated to 30 digits.
  EXPECT_NEAR(gelu(-1.0), -0.158655253931457051414767454368, 1e-12);
}

TEST(Gelu, RejectsComplex) { EXPECT_THROW(gelu(Tensor({2}, DType::complex128)), ShapeError); }

TEST(Gelu, DerivativeMatchesDifferences) {
  for (double x : {-3.0, -1.0, -0.2, 0.0, 0.7, 2.5}) {
    const double h = 1e-6;
    EXPECT_NEAR(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), 1e-8) << x;
  }
}

TEST(TensorIo, RoundTripIsBitExact) {
  for_all(20, 20, [](Gen& g) {
    const std::size_t rank = g.size(1, 4);
    Shape s;
    for (std::size_t i = 0; i < rank; ++i) s.push_back(g.size(1, 5));
    const Tensor t = g.size(0, 1) ? g.complex(s) : g.real(s);
    const auto path = temp_file("roundtrip");
    write_tensor(t, path);
    const Tensor u = read_tensor(path);
    ASSERT_EQ(u.dtype(), t.dtype());
    ASSERT_EQ(u.shape(), t.shape());
    ASSERT_EQ(std::memcmp(u.raw().data(), t.raw().data(), t.raw().size() * sizeof(double)), 0);
    std::filesystem::remove(path);
  });
}

TEST(TensorIo, SpecialValuesSurvive) {
  const Tensor t = Tensor::real({4}, {-0.0, std::nan(""), INFINITY, 5e-324});
  const Tensor u = decode_tensor(encode_tensor(t));
  EXPECT_EQ(std::memcmp(u.raw().data(), t.raw().data(), 4 * sizeof(double)), 0);
}

TEST(TensorIo, ScalarRoundTrips) {
  const Tensor t = Tensor::scalar(-2.5);
  const auto bytes = encode_tensor(t);
  EXPECT_EQ(bytes.size(), 6u + 8u);
  const Tensor u = decode_tensor(bytes);
  EXPECT_EQ(u.rank(), 0u);
  EXPECT_EQ(u.item(), -2.5);
}

TEST(TensorIo, HeaderLayout) {
  const auto bytes = encode_tensor(Tensor::complex({2, 1}, {{1, 2}, {3, 4}}));
  ASSERT_EQ(bytes.size(), 6u + 16u + 32u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GFT1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 2);
  EXPECT_EQ(bytes[6], 2);
  EXPECT_EQ(bytes[14], 1);
  double im;
  std::memcpy(&im, bytes.data() + 22 + 8, sizeof im);
  EXPECT_EQ(im, 2.0);
}

namespace {

TensorIoError::Kind decode_kind(std::vector<std::uint8_t> bytes) {
  try {
    decode_tensor(bytes);
  } catch (const TensorIoError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return TensorIoError::Kind::io;
}

}  // namespace

TEST(TensorIo, BadMagic) {
  auto bytes = encode_tensor(Tensor({2}));
  bytes[0] = 'X';
  EXPECT_EQ(decode_kind(bytes), TensorIoError::Kind::bad_magic);
}

TEST(TensorIo, BadDtype) {
  auto bytes = encode_tensor(Tensor({2}));
  bytes[4] = 7;
  EXPECT_EQ(decode_kind(bytes), TensorIoError::Kind::bad_dtype);
}

TEST(TensorIo, TruncatedPayload) {
  auto bytes = encode_tensor(Tensor({3, 3}));
  bytes.pop_back();
  EXPECT_EQ(decode_kind(bytes), TensorIoError::Kind::truncated);
  bytes.resize(9);
  EXPECT_EQ(decode_kind(bytes), TensorIoError::Kind::truncated);
}

TEST(TensorIo, ExtentOverflow) {
  auto bytes = encode_tensor(Tensor({2, 2}));
  for (int i = 0; i < 8; ++i) bytes[6 + i] = 0xff;
  for (int i = 0; i < 8; ++i) bytes[14 + i] = 0xff;
  EXPECT_EQ(decode_kind(bytes), TensorIoError::Kind::extent_overflow);
}

TEST(TensorIo, MissingFile) {
  try {
    read_tensor("/nonexistent/dir/t.gft");
    FAIL();
  } catch (const TensorIoError& e) {
    EXPECT_EQ(e.kind(), TensorIoError::Kind::io);
  }
}

TEST(Tensor, RealHasNoImaginaryPayload) {
  const Tensor t({3, 2});
  EXPECT_EQ(t.raw().size(), 6u);
  EXPECT_EQ(Tensor({3, 2}, DType::complex128).raw().size(), 12u);
  EXPECT_THROW(Tensor({0, 2}), ShapeError);
}
