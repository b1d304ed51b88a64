#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gfno/reference.hpp"
#include "gfno/spectral.hpp"
#include "support.hpp"

using namespace gfno;
using namespace gfno::spectral;
using gfno::test::Gen;
using gfno::test::for_all;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long wrap(long i, long n) { return ((i % n) + n) % n; }

/// y(i, j) = x(src(i, j)) with modular indices.
template <class F>
Tensor remap(const Tensor& x, F&& src) {
  const long n = static_cast<long>(x.shape()[0]);
  Tensor y(x.shape(), x.dtype());
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const auto [a, b] = src(i, j);
      const auto dst = static_cast<std::size_t>(i * n + j), from = static_cast<std::size_t>(wrap(a, n) * n + wrap(b, n));
      if (x.is_complex()) {
        y.cdata()[dst] = x.cdata()[from];
      } else {
        y.data()[dst] = x.data()[from];
      }
    }
  return y;
}

/// Direct evaluation of the trigonometric series of a coarse spectrum on an m x m grid.
Tensor series(const Tensor& X, std::size_t k, std::size_t m) {
  const long n = static_cast<long>(X.shape()[0]), kk = static_cast<long>(k);
  Tensor out({m, m});
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      cdouble acc = 0.0;
      for (long p = -(kk - 1); p <= kk - 1; ++p)
        for (long q = -(kk - 1); q <= kk - 1; ++q) {
          const cdouble c = X.cdata()[static_cast<std::size_t>(wrap(p, n) * n + wrap(q, n))];
          acc += c * std::polar(1.0, kTwoPi * (static_cast<double>(p * static_cast<long>(a)) +
                                               static_cast<double>(q * static_cast<long>(b))) /
                                         static_cast<double>(m));
        }
      out.data()[a * m + b] = acc.real() / static_cast<double>(n * n);
    }
  return out;
}

}  // namespace

TEST(Dft2, DeltaGivesOnes) {
  Tensor x({5, 4});
  x.data()[0] = 1.0;
  const Tensor X = dft2(x);
  for (auto c : X.cdata()) EXPECT_LT(std::abs(c - cdouble(1.0)), 1e-14);
}

TEST(Dft2, ConstantGivesDc) {
  Tensor x({6, 6});
  x.fill(0.5);
  const Tensor X = dft2(x);
  EXPECT_LT(std::abs(X.cdata()[0] - cdouble(18.0)), 1e-13);
  for (std::size_t i = 1; i < 36; ++i) EXPECT_LT(std::abs(X.cdata()[i]), 1e-13);
}

TEST(Dft2, MatchesDirectSum) {
  Gen g(1);
  const Tensor x = g.real({6, 6});
  EXPECT_LT(max_abs_diff(dft2(x), reference::dft2(x)), 1e-10);
  for (std::size_t n : {1u, 2u, 3u, 7u, 12u, 15u}) {
    const Tensor z = g.complex({2, n, n + 1});
    EXPECT_LT(max_abs_diff(dft2(z), reference::dft2(z)), 1e-10) << n;
    EXPECT_LT(max_abs_diff(idft2(z), reference::idft2(z)), 1e-10) << n;
  }
}

TEST(Dft2, CenteredLayoutIsShifted) {
  Gen g(2);
  for (std::size_t n : {4u, 5u}) {
    const Tensor x = g.real({n, n});
    const Tensor c = dft2(x, Layout::centered);
    EXPECT_LT(max_abs_diff(c, fftshift2(dft2(x))), 1e-14);
    EXPECT_LT(std::abs(c.cdata()[(n / 2) * n + n / 2] - dft2(x).cdata()[0]), 1e-14);
    EXPECT_LT(max_abs_diff(idft2(c, Layout::centered).real_part(), x), 1e-12);
    EXPECT_EQ(max_abs_diff(ifftshift2(fftshift2(x.as_complex())), x.as_complex()), 0.0);
  }
}

TEST(Dft2, FrequencyIndexMaps) {
  EXPECT_EQ(frequency_of(0, 8, Layout::standard), 0);
  EXPECT_EQ(frequency_of(5, 8, Layout::standard), -3);
  EXPECT_EQ(frequency_of(4, 8, Layout::centered), 0);
  EXPECT_EQ(frequency_of(0, 7, Layout::centered), -3);
  for (std::size_t n : {6u, 7u})
    for (auto layout : {Layout::standard, Layout::centered})
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(index_of(frequency_of(i, n, layout), n, layout), i);
}

TEST(Idft2, InvertsForward) {
  for_all(10, 3, [](Gen& g) {
    const Tensor z = g.complex({g.size(1, 9), g.size(1, 9)});
    ASSERT_LT(max_abs_diff(idft2(dft2(z)), z), 1e-10);
  });
}

TEST(Idft2, OnesGiveDelta) {
  Tensor X({4, 4}, DType::complex128);
  for (auto& c : X.cdata()) c = 1.0;
  const Tensor x = idft2(X);
  EXPECT_LT(std::abs(x.cdata()[0] - cdouble(1.0)), 1e-15);
  for (std::size_t i = 1; i < 16; ++i) EXPECT_LT(std::abs(x.cdata()[i]), 1e-15);
}

TEST(Idft2, HermitianSpectrumGivesRealField) {
  Gen g(4);
  for (std::size_t n : {6u, 7u}) {
    const Tensor R = g.complex({n, n});
    // Project onto R(xi) = conj(R(-xi)).
    Tensor H(R.shape(), DType::complex128);
    const long ln = static_cast<long>(n);
    for (long i = 0; i < ln; ++i)
      for (long j = 0; j < ln; ++j)
        H.cdata()[static_cast<std::size_t>(i * ln + j)] =
            0.5 * (R.cdata()[static_cast<std::size_t>(i * ln + j)] +
                   std::conj(R.cdata()[static_cast<std::size_t>(wrap(-i, ln) * ln + wrap(-j, ln))]));
    EXPECT_LT(max_abs_imag(idft2(H)), 1e-10);
  }
}

TEST(Rdft2, HalfSpectrumWidth) {
  const Tensor X = rdft2(Tensor({3, 4}));
  EXPECT_EQ(X.shape(), (Shape{3, 3}));
  EXPECT_EQ(rdft2(Tensor({3, 5})).shape(), (Shape{3, 3}));
}

TEST(Rdft2, SliceOfFullSpectrumAndRoundTrip) {
  for_all(10, 5, [](Gen& g) {
    const std::size_t nx = g.size(1, 10), ny = g.size(1, 10);
    const Tensor x = g.real({2, nx, ny});
    const Tensor H = rdft2(x), F = dft2(x);
    const std::size_t half = ny / 2 + 1;
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < half; ++j)
          ASSERT_LT(std::abs(H.cdata()[(s * nx + i) * half + j] - F.cdata()[(s * nx + i) * ny + j]), 1e-10);
    ASSERT_LT(max_abs_diff(irdft2(H, ny), x), 1e-10);
  });
}

TEST(Rdft2, SingleModeKeepsOnePeak) {
  const std::size_t n = 8;
  Tensor x({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) x.data()[i * n + j] = std::cos(kTwoPi * static_cast<double>(j) / n);
  const Tensor F = dft2(x), H = rdft2(x);
  EXPECT_NEAR(F.cdata()[1].real(), 32.0, 1e-12);
  EXPECT_NEAR(F.cdata()[n - 1].real(), 32.0, 1e-12);
  EXPECT_NEAR(H.cdata()[1].real(), 32.0, 1e-12);
  double rest = 0.0;
  for (std::size_t i = 0; i < H.numel(); ++i)
    if (i != 1) rest = std::max(rest, std::abs(H.cdata()[i]));
  EXPECT_LT(rest, 1e-12);
}

TEST(Rdft2, InconsistentExtentRejected) {
  const Tensor H = rdft2(Tensor({4, 8}));
  EXPECT_THROW(irdft2(H, 4), ShapeError);
  EXPECT_NO_THROW(irdft2(H, 9));
}

TEST(Band, SmallestKeepsDc) {
  Gen g(6);
  const Tensor C = dft2(g.real({6, 6}), Layout::centered);
  const Tensor B = truncate_band(C, 1);
  ASSERT_EQ(B.shape(), (Shape{1, 1}));
  EXPECT_EQ(B.cdata()[0], C.cdata()[3 * 6 + 3]);
}

TEST(Band, PadOfTruncateZeroesOutOfBand) {
  Gen g(7);
  for (std::size_t n : {7u, 8u}) {
    const Tensor C = g.complex({n, n});
    const std::size_t k = 3;
    const Tensor P = pad_band(truncate_band(C, k), n, n);
    const long c = static_cast<long>(n / 2);
    for (long i = 0; i < static_cast<long>(n); ++i)
      for (long j = 0; j < static_cast<long>(n); ++j) {
        const auto idx = static_cast<std::size_t>(i * static_cast<long>(n) + j);
        const bool in = std::abs(i - c) <= 2 && std::abs(j - c) <= 2;
        EXPECT_EQ(P.cdata()[idx], in ? C.cdata()[idx] : cdouble(0.0));
      }
  }
}

TEST(Band, TooLargeRejected) {
  EXPECT_THROW(truncate_band(Tensor({5, 5}, DType::complex128), 4), ShapeError);
  EXPECT_THROW(pad_band(Tensor({5, 5}, DType::complex128), 4, 4), ShapeError);
  EXPECT_THROW(band_rdft(Tensor({4, 4}), 3), ShapeError);
}

TEST(Band, PaddedInverseIsFourierSeries) {
  Gen g(8);
  const std::size_t n = 8, k = 3;
  const Tensor x = checks::bandlimited_field({n, n}, k - 1, g.seed());
  const Tensor C = dft2(x, Layout::centered);
  const Tensor fine = idft2(pad_band(truncate_band(C, k), 2 * n, 2 * n), Layout::centered);
  const Tensor oracle = series(dft2(x), k, 2 * n);
  EXPECT_LT(max_abs_imag(fine), 1e-12);
  EXPECT_LT(max_abs_diff(4.0 * fine.real_part(), oracle), 1e-10);
  EXPECT_LT(max_abs_diff(trig_interpolate(x, 2 * n, 2 * n), oracle), 1e-10);
}

TEST(Band, HalfBandMatchesDirectSum) {
  for_all(8, 9, [](Gen& g) {
    const std::size_t k = g.size(1, 4), nx = 2 * k - 1 + g.size(0, 4), ny = 2 * k - 1 + g.size(0, 4);
    const Tensor x = g.real({2, nx, ny});
    const Tensor b = band_rdft(x, k);
    ASSERT_EQ(b.shape(), (Shape{2, 2 * k - 1, k}));
    ASSERT_LT(max_abs_diff(b, reference::band_rdft(x, k)), 1e-10);
    const Tensor r = g.complex({2, 2 * k - 1, k});
    ASSERT_LT(max_abs_diff(band_irdft(r, nx, ny), reference::band_irdft(r, nx, ny)), 1e-10);
  });
}

TEST(TrigInterpolate, CoarsePointsArePreserved) {
  for_all(10, 10, [](Gen& g) {
    const std::size_t n = g.size(2, 9), f = g.size(2, 3);
    const Tensor x = g.real({n, n});
    const Tensor y = trig_interpolate(x, f * n, f * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ASSERT_NEAR(y.data()[(f * i) * f * n + f * j], x.data()[i * n + j], 1e-10);
  });
}

TEST(SpectralProperty, Parseval) {
  for_all(20, 11, [](Gen& g) {
    const Tensor x = g.real({g.size(1, 12), g.size(1, 12)});
    const double n = static_cast<double>(x.numel());
    const double e = l2_norm(x), E = l2_norm(dft2(x));
    ASSERT_NEAR(e * e, E * E / n, 1e-8 * std::max(1.0, e * e));
  });
}

TEST(SpectralProperty, TransformCommutesWithModularRotationAndFlip) {
  for_all(20, 12, [](Gen& g) {
    const std::size_t n = g.size(1, 12);
    const Tensor x = g.real({n, n});
    const Tensor X = dft2(x);
    // rho(i, j) = (-j, i), rho^{-1}(i, j) = (j, -i); mu is its own inverse.
    auto rho_inv = [](long i, long j) { return std::pair{j, -i}; };
    auto mu = [](long i, long j) { return std::pair{i, -j}; };
    ASSERT_LT(max_abs_diff(dft2(remap(x, rho_inv)), remap(X, rho_inv)), 1e-10);
    ASSERT_LT(max_abs_diff(dft2(remap(x, mu)), remap(X, mu)), 1e-10);
  });
}

TEST(SpectralProperty, TranslationIsPhase) {
  for_all(20, 13, [](Gen& g) {
    const long n = static_cast<long>(g.size(1, 10));
    const long b1 = g.integer(-n, n), b2 = g.integer(-n, n);
    const Tensor x = g.real({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
    const Tensor X = dft2(x), Y = dft2(remap(x, [&](long i, long j) { return std::pair{i - b1, j - b2}; }));
    for (long p = 0; p < n; ++p)
      for (long q = 0; q < n; ++q) {
        const auto idx = static_cast<std::size_t>(p * n + q);
        const cdouble phase = std::polar(1.0, -kTwoPi * static_cast<double>(p * b1 + q * b2) / static_cast<double>(n));
        ASSERT_LT(std::abs(Y.cdata()[idx] - X.cdata()[idx] * phase), 1e-10);
      }
  });
}

TEST(FftPlan, SharedAcrossCallers) {
  const auto a = FftPlan::get(12), b = FftPlan::get(12);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(a->size(), 12u);
  EXPECT_THROW(FftPlan::get(0), ShapeError);
}
