#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfno/error.hpp"

namespace gfno {

using cdouble = std::complex<double>;
using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { real64 = 0, complex128 = 1 };

std::size_t shape_numel(const Shape& shape);
std::string to_string(const Shape& shape);
std::string to_string(DType dtype);

/// Dense row-major n-dimensional array of 64-bit reals or complex values.
///
/// Complex payloads are stored as interleaved (re, im) pairs, so `raw()`
/// always exposes `numel() * (is_complex() ? 2 : 1)` doubles. A default
/// constructed tensor is the rank-0 real scalar 0.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, DType dtype = DType::real64);

  static Tensor scalar(double value);
  static Tensor real(Shape shape, std::vector<double> values);
  static Tensor complex(Shape shape, const std::vector<cdouble>& values);
  static Tensor zeros_like(const Tensor& other);

  DType dtype() const noexcept { return dtype_; }
  bool is_complex() const noexcept { return dtype_ == DType::complex128; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return numel_; }
  /// Extent of `axis`; negative values count from the last axis.
  std::size_t extent(std::ptrdiff_t axis) const;

  std::span<double> data();
  std::span<const double> data() const;
  std::span<cdouble> cdata();
  std::span<const cdouble> cdata() const;
  std::span<double> raw() noexcept { return buf_; }
  std::span<const double> raw() const noexcept { return buf_; }

  /// Value of a single-element real tensor.
  double item() const;

  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  Tensor as_complex() const;
  Tensor real_part() const;
  Tensor imag_part() const;
  void fill(double value);

 private:
  DType dtype_ = DType::real64;
  Shape shape_;
  std::size_t numel_ = 1;
  std::vector<double> buf_;
};

void require_real(const Tensor& t, const char* what);
void require_complex(const Tensor& t, const char* what);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Largest modulus of any entry.
double max_abs(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);
/// Largest |imag| of a complex tensor; 0 for real tensors.
double max_abs_imag(const Tensor& t);
double l2_norm(const Tensor& t);
/// Real inner product treating complex entries as (re, im) pairs.
double inner_product(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

/// 1x1 convolution core: out[o, p] = sum_i w[o, i] * x[i, p] over every
/// trailing (spatial) position p. Real weights may act on complex inputs.
Tensor contract_channels(const Tensor& x, const Tensor& w);

/// Same contraction applied independently to each entry of a leading batch
/// axis: x is (B, c_in, ...), result is (B, c_out, ...).
Tensor contract_channels_batched(const Tensor& x, const Tensor& w);

double gelu(double x);
/// d/dx of the exact erf-form GELU.
double gelu_derivative(double x);
Tensor gelu(const Tensor& x);

/// Tensor file format errors. Each failure mode gets its own kind so callers
/// can tell a foreign file from a damaged one.
class TensorIoError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_dtype, truncated, extent_overflow };

  TensorIoError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace gfno
