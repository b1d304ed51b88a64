#include "gfno/spectral.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace gfno::spectral {

namespace {

std::size_t wrap(long v, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

std::mutex& planner_mutex_ref() {
  static std::mutex mu;
  return mu;
}

struct Grid {
  std::size_t slices, nx, ny;
};

Grid grid_of(const Tensor& x, const char* what) {
  if (x.rank() < 2) {
    throw ShapeError(std::string(what) + ": expected at least 2 spatial axes, got shape " + to_string(x.shape()));
  }
  const std::size_t nx = x.extent(-2), ny = x.extent(-1);
  return {x.numel() / (nx * ny), nx, ny};
}

Shape with_last_two(const Shape& s, std::size_t a, std::size_t b) {
  Shape out = s;
  out[out.size() - 2] = a;
  out[out.size() - 1] = b;
  return out;
}

// Full complex 2-D transform of every slice, in place.
void fft2_inplace(std::span<cdouble> data, const Grid& g, bool inverse) {
  auto rows = FftPlan::get(g.ny);
  auto cols = FftPlan::get(g.nx);
  const long total_rows = static_cast<long>(g.slices * g.nx);
#pragma omp parallel for schedule(static) if (total_rows > 64)
  for (long r = 0; r < total_rows; ++r) {
    cdouble* row = data.data() + static_cast<std::size_t>(r) * g.ny;
    inverse ? rows->inverse(row) : rows->forward(row);
  }
  const long total_cols = static_cast<long>(g.slices * g.ny);
#pragma omp parallel if (total_cols > 64)
  {
    std::vector<cdouble> buf(g.nx);
#pragma omp for schedule(static)
    for (long c = 0; c < total_cols; ++c) {
      const std::size_t s = static_cast<std::size_t>(c) / g.ny, j = static_cast<std::size_t>(c) % g.ny;
      cdouble* base = data.data() + s * g.nx * g.ny + j;
      for (std::size_t i = 0; i < g.nx; ++i) buf[i] = base[i * g.ny];
      inverse ? cols->inverse(buf.data()) : cols->forward(buf.data());
      for (std::size_t i = 0; i < g.nx; ++i) base[i * g.ny] = buf[i];
    }
  }
}

// Forward transforms of real rows, two per complex FFT. Writes the first
// `keep` non-negative frequencies of each row into out (rows x keep).
void real_rows_forward(const double* x, std::size_t rows, std::size_t n, std::size_t keep, cdouble* out) {
  auto plan = FftPlan::get(n);
  const long pairs = static_cast<long>((rows + 1) / 2);
#pragma omp parallel if (pairs > 32)
  {
    std::vector<cdouble> z(n);
#pragma omp for schedule(static)
    for (long p = 0; p < pairs; ++p) {
      const std::size_t r0 = 2 * static_cast<std::size_t>(p);
      const bool pair = r0 + 1 < rows;
      const double* a = x + r0 * n;
      const double* b = pair ? a + n : nullptr;
      for (std::size_t j = 0; j < n; ++j) z[j] = cdouble(a[j], pair ? b[j] : 0.0);
      plan->forward(z.data());
      for (std::size_t c = 0; c < keep; ++c) {
        const cdouble zc = z[c];
        const cdouble zm = std::conj(z[(n - c) % n]);
        out[r0 * keep + c] = 0.5 * (zc + zm);
        if (pair) out[(r0 + 1) * keep + c] = cdouble(0.0, -0.5) * (zc - zm);
      }
    }
  }
}

// Inverse of real_rows_forward for rows holding frequencies 0..keep-1, with
// Hermitian completion. keep may include the Nyquist column (keep = n/2 + 1).
void real_rows_inverse(const cdouble* h, std::size_t rows, std::size_t n, std::size_t keep, double* out) {
  auto plan = FftPlan::get(n);
  const long pairs = static_cast<long>((rows + 1) / 2);
#pragma omp parallel if (pairs > 32)
  {
    std::vector<cdouble> za(n), zb(n), z(n);
    auto extend = [&](const cdouble* src, std::vector<cdouble>& dst) {
      std::fill(dst.begin(), dst.end(), cdouble{});
      for (std::size_t c = 0; c < keep; ++c) {
        const bool self_conj = c == 0 || 2 * c == n;
        if (self_conj) {
          dst[c] = src[c].real();
        } else {
          dst[c] = src[c];
          dst[n - c] = std::conj(src[c]);
        }
      }
    };
#pragma omp for schedule(static)
    for (long p = 0; p < pairs; ++p) {
      const std::size_t r0 = 2 * static_cast<std::size_t>(p);
      const bool pair = r0 + 1 < rows;
      extend(h + r0 * keep, za);
      if (pair) {
        extend(h + (r0 + 1) * keep, zb);
      } else {
        std::fill(zb.begin(), zb.end(), cdouble{});
      }
      for (std::size_t j = 0; j < n; ++j) z[j] = za[j] + cdouble(0.0, 1.0) * zb[j];
      plan->inverse(z.data());
      for (std::size_t j = 0; j < n; ++j) {
        out[r0 * n + j] = z[j].real();
        if (pair) out[(r0 + 1) * n + j] = z[j].imag();
      }
    }
  }
}

}  // namespace

long frequency_of(std::size_t index, std::size_t n, Layout layout) {
  const long i = static_cast<long>(index), m = static_cast<long>(n);
  if (layout == Layout::centered) return i - m / 2;
  return 2 * i < m ? i : i - m;
}

std::size_t index_of(long frequency, std::size_t n, Layout layout) {
  if (layout == Layout::centered) return wrap(frequency + static_cast<long>(n / 2), n);
  return wrap(frequency, n);
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw ShapeError("FFT length must be positive");
  fftw_complex* buf = fftw_alloc_complex(n);
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_ = fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

std::mutex& FftPlan::planner_mutex() { return planner_mutex_ref(); }

std::shared_ptr<const FftPlan> FftPlan::get(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard lock(planner_mutex());
  auto& slot = cache[n];
  if (!slot) slot = std::shared_ptr<const FftPlan>(new FftPlan(n));
  return slot;
}

void FftPlan::transform(cdouble* a, bool inverse) const {
  auto* z = reinterpret_cast<fftw_complex*>(a);
  fftw_execute_dft(static_cast<fftw_plan>(inverse ? inv_ : fwd_), z, z);
}

namespace {

/// Cached batched 2-D real transforms (r2c forward, c2r inverse).
fftw_plan real_plan(std::size_t slices, std::size_t nx, std::size_t ny, bool inverse) {
  static std::map<std::array<std::size_t, 4>, fftw_plan> cache;
  std::lock_guard lock(planner_mutex_ref());
  fftw_plan& slot = cache[{slices, nx, ny, inverse ? 1u : 0u}];
  if (!slot) {
    const int dims[2] = {static_cast<int>(nx), static_cast<int>(ny)};
    const std::size_t half = ny / 2 + 1;
    double* r = fftw_alloc_real(slices * nx * ny);
    fftw_complex* c = fftw_alloc_complex(slices * nx * half);
    const int howmany = static_cast<int>(slices);
    const int rdist = static_cast<int>(nx * ny), cdist = static_cast<int>(nx * half);
    slot = inverse ? fftw_plan_many_dft_c2r(2, dims, howmany, c, nullptr, 1, cdist, r, nullptr, 1, rdist,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT)
                   : fftw_plan_many_dft_r2c(2, dims, howmany, r, nullptr, 1, rdist, c, nullptr, 1, cdist,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(r);
    fftw_free(c);
  }
  return slot;
}

}  // namespace

namespace {

Tensor shift2(const Tensor& x, bool forward) {
  require_complex(x, "fftshift2");
  const Grid g = grid_of(x, "fftshift2");
  Tensor out(x.shape(), DType::complex128);
  auto src = x.cdata();
  auto dst = out.cdata();
  const std::size_t hx = forward ? g.nx / 2 : (g.nx + 1) / 2;
  const std::size_t hy = forward ? g.ny / 2 : (g.ny + 1) / 2;
  for (std::size_t s = 0; s < g.slices; ++s) {
    const std::size_t base = s * g.nx * g.ny;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t ti = (i + hx) % g.nx;
      for (std::size_t j = 0; j < g.ny; ++j) dst[base + ti * g.ny + (j + hy) % g.ny] = src[base + i * g.ny + j];
    }
  }
  return out;
}

}  // namespace

Tensor fftshift2(const Tensor& x) { return shift2(x, true); }
Tensor ifftshift2(const Tensor& x) { return shift2(x, false); }

Tensor dft2(const Tensor& x, Layout layout) {
  const Grid g = grid_of(x, "dft2");
  Tensor out = x.as_complex();
  fft2_inplace(out.cdata(), g, false);
  return layout == Layout::centered ? fftshift2(out) : out;
}

Tensor idft2(const Tensor& x, Layout layout) {
  require_complex(x, "idft2");
  const Grid g = grid_of(x, "idft2");
  Tensor out = layout == Layout::centered ? ifftshift2(x) : x;
  fft2_inplace(out.cdata(), g, true);
  const double scale = 1.0 / static_cast<double>(g.nx * g.ny);
  for (double& v : out.raw()) v *= scale;
  return out;
}

Tensor rdft2(const Tensor& x) {
  require_real(x, "rdft2");
  const Grid g = grid_of(x, "rdft2");
  Tensor out(with_last_two(x.shape(), g.nx, g.ny / 2 + 1), DType::complex128);
  if (g.slices == 0) return out;
  fftw_execute_dft_r2c(real_plan(g.slices, g.nx, g.ny, false), const_cast<double*>(x.data().data()),
                       reinterpret_cast<fftw_complex*>(out.cdata().data()));
  return out;
}

Tensor irdft2(const Tensor& x, std::size_t n_y) {
  require_complex(x, "irdft2");
  const Grid g = grid_of(x, "irdft2");
  const std::size_t half = n_y / 2 + 1;
  if (n_y == 0 || g.ny != half) {
    throw ShapeError("irdft2: half spectrum " + to_string(x.shape()) + " inconsistent with declared n_y=" +
                     std::to_string(n_y) + " (expects last extent " + std::to_string(half) + ")");
  }
  Tensor scratch = x;
  Tensor out(with_last_two(x.shape(), g.nx, n_y));
  if (g.slices == 0) return out;
  fftw_execute_dft_c2r(real_plan(g.slices, g.nx, n_y, true), reinterpret_cast<fftw_complex*>(scratch.cdata().data()),
                       out.data().data());
  const double scale = 1.0 / static_cast<double>(g.nx * n_y);
  for (double& v : out.data()) v *= scale;
  return out;
}

Tensor truncate_band(const Tensor& centered, std::size_t k) {
  require_complex(centered, "truncate_band");
  const Grid g = grid_of(centered, "truncate_band");
  const std::size_t b = 2 * k - 1;
  if (k == 0 || b > g.nx || b > g.ny) {
    throw ShapeError("truncate_band: band 2k-1=" + std::to_string(b) + " does not fit grid " + to_string(centered.shape()));
  }
  Tensor out(with_last_two(centered.shape(), b, b), DType::complex128);
  auto src = centered.cdata();
  auto dst = out.cdata();
  const std::size_t ox = g.nx / 2 - (k - 1), oy = g.ny / 2 - (k - 1);
  for (std::size_t s = 0; s < g.slices; ++s)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        dst[(s * b + i) * b + j] = src[(s * g.nx + ox + i) * g.ny + oy + j];
  return out;
}

Tensor pad_band(const Tensor& band, std::size_t n_x, std::size_t n_y) {
  require_complex(band, "pad_band");
  const Grid g = grid_of(band, "pad_band");
  if (g.nx != g.ny || g.nx % 2 == 0) throw ShapeError("pad_band: band must be odd and square, got " + to_string(band.shape()));
  if (g.nx > n_x || g.ny > n_y) {
    throw ShapeError("pad_band: band " + to_string(band.shape()) + " larger than target grid " + std::to_string(n_x) +
                     "x" + std::to_string(n_y));
  }
  const std::size_t b = g.nx, k = (b + 1) / 2;
  Tensor out(with_last_two(band.shape(), n_x, n_y), DType::complex128);
  auto src = band.cdata();
  auto dst = out.cdata();
  const std::size_t ox = n_x / 2 - (k - 1), oy = n_y / 2 - (k - 1);
  for (std::size_t s = 0; s < g.slices; ++s)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        dst[(s * n_x + ox + i) * n_y + oy + j] = src[(s * b + i) * b + j];
  return out;
}

Tensor band_rdft(const Tensor& x, std::size_t k) {
  require_real(x, "band_rdft");
  const Grid g = grid_of(x, "band_rdft");
  const std::size_t b = 2 * k - 1;
  if (k == 0 || b > g.nx || b > g.ny) {
    throw ShapeError("band_rdft: band 2k-1=" + std::to_string(b) + " does not fit grid " + to_string(x.shape()) +
                     "; use fewer modes");
  }
  std::vector<cdouble> rows(g.slices * g.nx * k);
  real_rows_forward(x.data().data(), g.slices * g.nx, g.ny, k, rows.data());

  Tensor out(with_last_two(x.shape(), b, k), DType::complex128);
  auto dst = out.cdata();
  auto plan = FftPlan::get(g.nx);
  const long cols = static_cast<long>(g.slices * k);
#pragma omp parallel if (cols > 64)
  {
    std::vector<cdouble> buf(g.nx);
#pragma omp for schedule(static)
    for (long c = 0; c < cols; ++c) {
      const std::size_t s = static_cast<std::size_t>(c) / k, j = static_cast<std::size_t>(c) % k;
      for (std::size_t i = 0; i < g.nx; ++i) buf[i] = rows[(s * g.nx + i) * k + j];
      plan->forward(buf.data());
      for (std::size_t r = 0; r < b; ++r) {
        const long xi = static_cast<long>(r) - static_cast<long>(k - 1);
        dst[(s * b + r) * k + j] = buf[wrap(xi, g.nx)];
      }
    }
  }
  return out;
}

Tensor band_irdft(const Tensor& band, std::size_t n_x, std::size_t n_y) {
  require_complex(band, "band_irdft");
  const Grid g = grid_of(band, "band_irdft");
  const std::size_t b = g.nx, k = g.ny;
  if (b != 2 * k - 1) throw ShapeError("band_irdft: expected half band (2k-1, k), got " + to_string(band.shape()));
  if (b > n_x || b > n_y) {
    throw ShapeError("band_irdft: band " + to_string(band.shape()) + " does not fit grid " + std::to_string(n_x) + "x" +
                     std::to_string(n_y) + "; use fewer modes");
  }
  std::vector<cdouble> rows(g.slices * n_x * k);
  auto src = band.cdata();
  auto plan = FftPlan::get(n_x);
  const long cols = static_cast<long>(g.slices * k);
#pragma omp parallel if (cols > 64)
  {
    std::vector<cdouble> buf(n_x);
#pragma omp for schedule(static)
    for (long c = 0; c < cols; ++c) {
      const std::size_t s = static_cast<std::size_t>(c) / k, j = static_cast<std::size_t>(c) % k;
      std::fill(buf.begin(), buf.end(), cdouble{});
      for (std::size_t r = 0; r < b; ++r) {
        const long xi = static_cast<long>(r) - static_cast<long>(k - 1);
        buf[wrap(xi, n_x)] = src[(s * b + r) * k + j];
      }
      plan->inverse(buf.data());
      for (std::size_t i = 0; i < n_x; ++i) rows[(s * n_x + i) * k + j] = buf[i];
    }
  }
  Tensor out(with_last_two(band.shape(), n_x, n_y));
  real_rows_inverse(rows.data(), g.slices * n_x, n_y, k, out.data().data());
  const double scale = 1.0 / static_cast<double>(n_x * n_y);
  for (double& v : out.data()) v *= scale;
  return out;
}

Tensor band_irdft_adjoint(const Tensor& grad_field, std::size_t k) {
  const Grid g = grid_of(grad_field, "band_irdft_adjoint");
  Tensor out = band_rdft(grad_field, k);
  const double scale = 1.0 / static_cast<double>(g.nx * g.ny);
  auto d = out.cdata();
  for (std::size_t e = 0; e < d.size(); ++e) d[e] *= (e % k == 0 ? 1.0 : 2.0) * scale;
  return out;
}

Tensor band_rdft_adjoint(const Tensor& grad_band, std::size_t n_x, std::size_t n_y) {
  require_complex(grad_band, "band_rdft_adjoint");
  const std::size_t k = grad_band.extent(-1);
  Tensor scaled = grad_band;
  auto d = scaled.cdata();
  for (std::size_t e = 0; e < d.size(); ++e) d[e] *= e % k == 0 ? 1.0 : 0.5;
  Tensor out = band_irdft(scaled, n_x, n_y);
  const double scale = static_cast<double>(n_x * n_y);
  for (double& v : out.data()) v *= scale;
  return out;
}

Tensor trig_interpolate(const Tensor& x, std::size_t m_x, std::size_t m_y) {
  require_real(x, "trig_interpolate");
  const Grid g = grid_of(x, "trig_interpolate");
  if (m_x < g.nx || m_y < g.ny) {
    throw ShapeError("trig_interpolate: target " + std::to_string(m_x) + "x" + std::to_string(m_y) +
                     " is coarser than input " + to_string(x.shape()));
  }
  struct Target {
    std::size_t index;
    double weight;
  };
  auto targets = [](std::size_t n, std::size_t m) {
    std::vector<std::vector<Target>> map(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long xi = frequency_of(i, n, Layout::standard);
      if (n % 2 == 0 && xi == -static_cast<long>(n / 2) && m > n) {
        map[i] = {{wrap(xi, m), 0.5}, {wrap(-xi, m), 0.5}};
      } else {
        map[i] = {{wrap(xi, m), 1.0}};
      }
    }
    return map;
  };
  const auto tx = targets(g.nx, m_x), ty = targets(g.ny, m_y);
  const Tensor spec = dft2(x);
  Tensor fine(with_last_two(x.shape(), m_x, m_y), DType::complex128);
  auto src = spec.cdata();
  auto dst = fine.cdata();
  for (std::size_t s = 0; s < g.slices; ++s)
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j) {
        const cdouble v = src[(s * g.nx + i) * g.ny + j];
        for (const auto& a : tx[i])
          for (const auto& c : ty[j]) dst[(s * m_x + a.index) * m_y + c.index] += a.weight * c.weight * v;
      }
  const double gain = static_cast<double>(m_x * m_y) / static_cast<double>(g.nx * g.ny);
  return gain * idft2(fine).real_part();
}

}  // namespace gfno::spectral
