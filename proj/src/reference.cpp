#include "gfno/reference.hpp"

#include <cmath>
#include <numbers>

namespace gfno::reference {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cdouble phase(double sign, long a, long b, std::size_t na, std::size_t nb) {
  const double t = kTwoPi * (static_cast<double>(a) / static_cast<double>(na) +
                             static_cast<double>(b) / static_cast<double>(nb));
  return {std::cos(t), sign * std::sin(t)};
}

long mod(long v, long n) { return ((v % n) + n) % n; }

Shape last_two(Shape s, std::size_t a, std::size_t b) {
  s[s.size() - 2] = a;
  s[s.size() - 1] = b;
  return s;
}

Tensor direct(const Tensor& x, double sign, double scale) {
  const std::size_t nx = x.extent(-2), ny = x.extent(-1), slices = x.numel() / (nx * ny);
  const Tensor xc = x.as_complex();
  Tensor out(x.shape(), DType::complex128);
  auto in = xc.cdata();
  auto o = out.cdata();
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t a = 0; a < nx; ++a)
      for (std::size_t b = 0; b < ny; ++b) {
        cdouble acc{};
        for (std::size_t i = 0; i < nx; ++i)
          for (std::size_t j = 0; j < ny; ++j)
            acc += in[(s * nx + i) * ny + j] *
                   phase(sign, static_cast<long>((a * i) % nx), static_cast<long>((b * j) % ny), nx, ny);
        o[(s * nx + a) * ny + b] = scale * acc;
      }
  return out;
}

}  // namespace

Tensor dft2(const Tensor& x) { return direct(x, -1.0, 1.0); }

Tensor idft2(const Tensor& x) {
  return direct(x, 1.0, 1.0 / static_cast<double>(x.extent(-2) * x.extent(-1)));
}

Tensor contract(const Tensor& x, const Tensor& w) {
  const std::size_t batch = x.shape()[0], c_in = x.shape()[1], c_out = w.shape()[0];
  const std::size_t pos = x.numel() / (batch * c_in);
  Shape s = x.shape();
  s[1] = c_out;
  Tensor out(s, x.dtype());
  const std::size_t width = x.is_complex() ? 2 : 1;
  auto in = x.raw();
  auto o = out.raw();
  auto wd = w.data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t ci = 0; ci < c_in; ++ci)
        for (std::size_t p = 0; p < pos * width; ++p)
          o[(b * c_out + co) * pos * width + p] += wd[co * c_in + ci] * in[(b * c_in + ci) * pos * width + p];
  return out;
}

Tensor band_rdft(const Tensor& x, std::size_t k) {
  const std::size_t nx = x.extent(-2), ny = x.extent(-1), slices = x.numel() / (nx * ny), b = 2 * k - 1;
  Tensor out(last_two(x.shape(), b, k), DType::complex128);
  auto in = x.data();
  auto o = out.cdata();
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t c = 0; c < k; ++c) {
        const long xi1 = static_cast<long>(r) - static_cast<long>(k - 1), xi2 = static_cast<long>(c);
        cdouble acc{};
        for (std::size_t i = 0; i < nx; ++i)
          for (std::size_t j = 0; j < ny; ++j)
            acc += in[(s * nx + i) * ny + j] * phase(-1.0, xi1 * static_cast<long>(i), xi2 * static_cast<long>(j), nx, ny);
        o[(s * b + r) * k + c] = acc;
      }
  return out;
}

Tensor band_irdft(const Tensor& band, std::size_t n_x, std::size_t n_y) {
  const std::size_t b = band.extent(-2), k = band.extent(-1), slices = band.numel() / (b * k);
  Tensor out(last_two(band.shape(), n_x, n_y));
  auto in = band.cdata();
  auto o = out.data();
  const double scale = 1.0 / static_cast<double>(n_x * n_y);
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < n_x; ++i)
      for (std::size_t j = 0; j < n_y; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t c = 0; c < k; ++c) {
            const long xi1 = static_cast<long>(r) - static_cast<long>(k - 1), xi2 = static_cast<long>(c);
            const double weight = c == 0 ? 1.0 : 2.0;
            acc += weight *
                   (in[(s * b + r) * k + c] * phase(1.0, xi1 * static_cast<long>(i), xi2 * static_cast<long>(j), n_x, n_y))
                       .real();
          }
        o[(s * n_x + i) * n_y + j] = scale * acc;
      }
  return out;
}

Tensor spectral_conv(const Tensor& x, const Tensor& kernel, std::size_t k) {
  const std::size_t batch = x.shape()[0], c_in = x.shape()[1], nx = x.shape()[2], ny = x.shape()[3];
  const std::size_t modes = kernel.shape()[0], c_out = kernel.shape()[1], b = 2 * k - 1;
  const Tensor xb = band_rdft(x, k);
  Tensor yb({batch, c_out, b, k}, DType::complex128);
  auto kin = kernel.cdata();
  auto xi = xb.cdata();
  auto yo = yb.cdata();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < c_out; ++o)
      for (std::size_t m = 0; m < modes; ++m) {
        cdouble acc{};
        for (std::size_t i = 0; i < c_in; ++i) acc += kin[(m * c_out + o) * c_in + i] * xi[(n * c_in + i) * modes + m];
        yo[(n * c_out + o) * modes + m] = acc;
      }
  return band_irdft(yb, nx, ny);
}

Tensor spatial_gconv(const Tensor& f, const Tensor& bank, group::Group g) {
  const std::size_t d_in = f.shape()[0], dg = f.shape()[1], n = f.shape()[2];
  const std::size_t d_out = bank.shape()[0], b = bank.shape()[3], h = b / 2;
  const long ln = static_cast<long>(n);
  // psi[o, i, u] on the n x n grid.
  Tensor psi({d_out, d_in, dg, n, n}, DType::complex128);
  auto pb = bank.cdata();
  auto pp = psi.cdata();
  const double scale = 1.0 / static_cast<double>(n * n);
  for (std::size_t q = 0; q < d_out * d_in * dg; ++q)
    for (std::size_t z1 = 0; z1 < n; ++z1)
      for (std::size_t z2 = 0; z2 < n; ++z2) {
        cdouble acc{};
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t c = 0; c < b; ++c) {
            const long xi1 = static_cast<long>(r) - static_cast<long>(h), xi2 = static_cast<long>(c) - static_cast<long>(h);
            acc += pb[(q * b + r) * b + c] *
                   phase(1.0, mod(xi1 * static_cast<long>(z1), ln), mod(xi2 * static_cast<long>(z2), ln), n, n);
          }
        pp[(q * n + z1) * n + z2] = scale * acc;
      }

  const auto els = group::elements(g);
  Tensor out({d_out, dg, n, n}, DType::complex128);
  auto o = out.cdata();
  auto fin = f.data();
  for (std::size_t a = 0; a < d_out; ++a)
    for (const auto& t : els) {
      const auto tinv = group::stab_inverse(t);
      const group::Mat2 minv = tinv.matrix();
      for (long y1 = 0; y1 < ln; ++y1)
        for (long y2 = 0; y2 < ln; ++y2) {
          cdouble acc{};
          for (std::size_t i = 0; i < d_in; ++i)
            for (const auto& s : els) {
              // g^{-1} h = (M_t^{-1} (x - y), t^{-1} s)
              const std::size_t u = group::stab_compose(tinv, s).index();
              for (long x1 = 0; x1 < ln; ++x1)
                for (long x2 = 0; x2 < ln; ++x2) {
                  const auto z = minv.apply(x1 - y1, x2 - y2);
                  // psi~(z, u) = psi_u(-z)
                  const std::size_t zi = static_cast<std::size_t>(mod(-z[0], ln)),
                                    zj = static_cast<std::size_t>(mod(-z[1], ln));
                  acc += fin[((i * dg + s.index()) * n + static_cast<std::size_t>(x1)) * n + static_cast<std::size_t>(x2)] *
                         pp[(((a * d_in + i) * dg + u) * n + zi) * n + zj];
                }
            }
          o[((a * dg + t.index()) * n + static_cast<std::size_t>(y1)) * n + static_cast<std::size_t>(y2)] = acc;
        }
    }
  return out;
}

}  // namespace gfno::reference
