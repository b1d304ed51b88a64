#pragma once

#include "gfno/group.hpp"
#include "gfno/tensor.hpp"

/// Serial, direct-summation versions of the library kernels. Slow on
/// purpose: each is written straight from its defining sum and shares no
/// code with the fast paths, so tests and benchmarks can compare against it.
namespace gfno::reference {

/// X(xi) = sum_x x(x) exp(-2 pi i <xi, x> / n), standard layout, complex out.
Tensor dft2(const Tensor& x);
/// x(x) = (1 / n_x n_y) sum_xi X(xi) exp(+2 pi i <xi, x> / n).
Tensor idft2(const Tensor& x);

/// x (B, c_in, ...) against w (c_out, c_in).
Tensor contract(const Tensor& x, const Tensor& w);

/// Half band (..., 2k-1, k) by direct summation.
Tensor band_rdft(const Tensor& x, std::size_t k);
/// Re of the inverse transform of the half band's Hermitian extension.
Tensor band_irdft(const Tensor& band, std::size_t n_x, std::size_t n_y);

/// x (B, C_in, n, n), kernel (M, C_out, C_in) over band_rdft modes.
Tensor spectral_conv(const Tensor& x, const Tensor& kernel, std::size_t k);

/// Group correlation over Z_n^2 x S_G as a double sum,
///   out(g) = sum_h f(h) psi~(g^{-1} h),  psi~(z, u) = psi_u(-z),
/// where psi_u is the inverse transform of the centered band bank[o, i, u].
/// f (d_in, d_g, n, n) real, bank (d_out, d_in, d_g, b, b) complex with
/// b <= n; translations act modulo n about index 0. Complex output.
Tensor spatial_gconv(const Tensor& f, const Tensor& bank, group::Group g);

}  // namespace gfno::reference
