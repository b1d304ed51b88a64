#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "gfno/tensor.hpp"

/// Two-dimensional discrete Fourier transforms over the last two axes.
///
/// Conventions used everywhere in the library:
///  * forward transforms are unnormalized, X(xi) = sum_x x(x) exp(-2 pi i <xi, x> / n);
///  * inverse transforms carry the full 1 / (n_x n_y) factor;
///  * the centered layout stores frequency 0 at index (n_x / 2, n_y / 2) (integer
///    division), i.e. index c holds frequency c - n / 2;
///  * half spectra keep last-axis frequencies 0 .. n_y / 2 in standard order.
namespace gfno::spectral {

enum class Layout { standard, centered };
enum class Coverage { full, hermitian_half };

struct SpectrumLayout {
  std::size_t n_x = 1;
  std::size_t n_y = 1;
  Layout layout = Layout::standard;
  Coverage coverage = Coverage::full;

  std::size_t stored_y() const { return coverage == Coverage::full ? n_y : n_y / 2 + 1; }
  /// Index holding frequency (0, 0).
  std::size_t zero_row() const { return layout == Layout::centered ? n_x / 2 : 0; }
  std::size_t zero_col() const {
    return layout == Layout::centered && coverage == Coverage::full ? n_y / 2 : 0;
  }
};

/// Signed frequency stored at `index` of an axis of extent `n`.
long frequency_of(std::size_t index, std::size_t n, Layout layout);
/// Storage index of a (possibly out-of-range) frequency, with modular wrap.
std::size_t index_of(long frequency, std::size_t n, Layout layout);

/// Cached 1-D complex transform of a fixed length, backed by an FFTW plan.
class FftPlan {
 public:
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  /// Shared, thread-safe plan cache.
  static std::shared_ptr<const FftPlan> get(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// In-place unnormalized transforms (sign -1 forward, +1 inverse).
  void forward(cdouble* data) const { transform(data, false); }
  void inverse(cdouble* data) const { transform(data, true); }

 private:
  explicit FftPlan(std::size_t n);
  static std::mutex& planner_mutex();
  void transform(cdouble* data, bool inverse) const;

  std::size_t n_;
  void* fwd_ = nullptr;  // fftw_plan
  void* inv_ = nullptr;
};

Tensor fftshift2(const Tensor& x);
Tensor ifftshift2(const Tensor& x);

Tensor dft2(const Tensor& x, Layout layout = Layout::standard);
Tensor idft2(const Tensor& x, Layout layout = Layout::standard);

/// Real-input transform returning the Hermitian half (…, n_x, n_y/2 + 1).
Tensor rdft2(const Tensor& x);
/// Inverse of rdft2 for a declared last-axis extent n_y. Self-conjugate
/// columns contribute only their real part, i.e. the result is
/// Re(idft2(hermitian_extend(X))).
Tensor irdft2(const Tensor& x, std::size_t n_y);

/// Centered frequencies xi in [-(k-1), k-1]^2 of a centered full spectrum.
Tensor truncate_band(const Tensor& centered, std::size_t k);
/// Embeds an odd centered band into a zero centered spectrum of extents (n_x, n_y).
Tensor pad_band(const Tensor& band, std::size_t n_x, std::size_t n_y);

/// Pruned transforms used by the spectral layers: the real field's spectrum
/// restricted to the half band xi_1 in [-(k-1), k-1], xi_2 in [0, k-1], with
/// rows in centered order. Shape (…, 2k-1, k).
Tensor band_rdft(const Tensor& x, std::size_t k);
/// Inverse of band_rdft: Re(idft2) of the Hermitian extension of a half band
/// embedded in an (n_x, n_y) grid.
Tensor band_irdft(const Tensor& band, std::size_t n_x, std::size_t n_y);
/// Exact adjoints (real inner product on paired reals) of the two maps above.
Tensor band_rdft_adjoint(const Tensor& grad_band, std::size_t n_x, std::size_t n_y);
Tensor band_irdft_adjoint(const Tensor& grad_field, std::size_t k);

/// Trigonometric interpolation of a real periodic field onto a finer
/// (m_x, m_y) grid by zero-padding its spectrum. Even-extent Nyquist
/// coefficients are split symmetrically so the result stays real.
Tensor trig_interpolate(const Tensor& x, std::size_t m_x, std::size_t m_y);

}  // namespace gfno::spectral
