#include "gfno/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gfno {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowCMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t normalize_axis(std::ptrdiff_t axis, std::size_t rank) {
  const auto r = static_cast<std::ptrdiff_t>(rank);
  const std::ptrdiff_t a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

template <class Fn>
Tensor zip(const Tensor& a, const Tensor& b, const char* what, Fn fn) {
  require_same_shape(a, b, what);
  if (a.dtype() != b.dtype()) {
    throw ShapeError(std::string(what) + ": dtype mismatch " + to_string(a.dtype()) + " vs " +
                     to_string(b.dtype()));
  }
  Tensor out(a.shape(), a.dtype());
  auto o = out.raw();
  auto x = a.raw();
  auto y = b.raw();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fn(x[i], y[i]);
  return out;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

std::string to_string(DType dtype) { return dtype == DType::real64 ? "real64" : "complex128"; }

Tensor::Tensor() : buf_(1, 0.0) {}

Tensor::Tensor(Shape shape, DType dtype)
    : dtype_(dtype), shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape_));
  }
  buf_.assign(numel_ * (dtype_ == DType::complex128 ? 2 : 1), 0.0);
}

Tensor Tensor::scalar(double value) {
  Tensor t;
  t.buf_[0] = value;
  return t;
}

Tensor Tensor::real(Shape shape, std::vector<double> values) {
  Tensor t(std::move(shape));
  if (values.size() != t.numel()) {
    throw ShapeError("Tensor::real: " + std::to_string(values.size()) +
                     " values for shape " + to_string(t.shape()));
  }
  t.buf_ = std::move(values);
  return t;
}

Tensor Tensor::complex(Shape shape, const std::vector<cdouble>& values) {
  Tensor t(std::move(shape), DType::complex128);
  if (values.size() != t.numel()) {
    throw ShapeError("Tensor::complex: " + std::to_string(values.size()) +
                     " values for shape " + to_string(t.shape()));
  }
  std::copy(values.begin(), values.end(), t.cdata().begin());
  return t;
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape(), other.dtype()); }

std::size_t Tensor::extent(std::ptrdiff_t axis) const {
  return shape_[normalize_axis(axis, shape_.size())];
}

std::span<double> Tensor::data() {
  require_real(*this, "Tensor::data");
  return buf_;
}

std::span<const double> Tensor::data() const {
  require_real(*this, "Tensor::data");
  return buf_;
}

std::span<cdouble> Tensor::cdata() {
  require_complex(*this, "Tensor::cdata");
  return {reinterpret_cast<cdouble*>(buf_.data()), numel_};
}

std::span<const cdouble> Tensor::cdata() const {
  require_complex(*this, "Tensor::cdata");
  return {reinterpret_cast<const cdouble*>(buf_.data()), numel_};
}

double Tensor::item() const {
  require_real(*this, "Tensor::item");
  if (numel_ != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return buf_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_numel(shape) != numel_) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

Tensor Tensor::as_complex() const {
  if (is_complex()) return *this;
  Tensor out(shape_, DType::complex128);
  auto o = out.cdata();
  for (std::size_t i = 0; i < numel_; ++i) o[i] = cdouble(buf_[i], 0.0);
  return out;
}

Tensor Tensor::real_part() const {
  if (!is_complex()) return *this;
  Tensor out(shape_);
  for (std::size_t i = 0; i < numel_; ++i) out.buf_[i] = buf_[2 * i];
  return out;
}

Tensor Tensor::imag_part() const {
  Tensor out(shape_);
  if (is_complex()) {
    for (std::size_t i = 0; i < numel_; ++i) out.buf_[i] = buf_[2 * i + 1];
  }
  return out;
}

void Tensor::fill(double value) {
  if (is_complex()) {
    for (auto& z : cdata()) z = cdouble(value, 0.0);
  } else {
    std::fill(buf_.begin(), buf_.end(), value);
  }
}

void require_real(const Tensor& t, const char* what) {
  if (t.is_complex()) throw ShapeError(std::string(what) + ": expected real64 tensor");
}

void require_complex(const Tensor& t, const char* what) {
  if (!t.is_complex()) throw ShapeError(std::string(what) + ": expected complex128 tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  if (t.is_complex()) {
    for (auto z : t.cdata()) m = std::max(m, std::abs(z));
  } else {
    for (auto v : t.data()) m = std::max(m, std::abs(v));
  }
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  if (a.is_complex() || b.is_complex()) {
    const Tensor ca = a.as_complex();
    const Tensor cb = b.as_complex();
    double m = 0.0;
    auto x = ca.cdata();
    auto y = cb.cdata();
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
  }
  double m = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

double max_abs_imag(const Tensor& t) {
  if (!t.is_complex()) return 0.0;
  double m = 0.0;
  for (auto z : t.cdata()) m = std::max(m, std::abs(z.imag()));
  return m;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (auto v : t.raw()) s += v * v;
  return std::sqrt(s);
}

double inner_product(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "inner_product");
  if (a.dtype() != b.dtype()) throw ShapeError("inner_product: dtype mismatch");
  double s = 0.0;
  auto x = a.raw();
  auto y = b.raw();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

bool all_finite(const Tensor& t) {
  for (auto v : t.raw()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  return zip(a, b, "operator+", [](double x, double y) { return x + y; });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  return zip(a, b, "operator-", [](double x, double y) { return x - y; });
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.raw()) v *= s;
  return out;
}

namespace {

void check_contract_shapes(const Tensor& x, const Tensor& w, std::size_t channel_axis) {
  if (w.rank() != 2 || x.rank() < channel_axis + 1 || x.shape()[channel_axis] != w.shape()[1]) {
    throw ShapeError("contract_channels: input " + to_string(x.shape()) + " incompatible with weights " +
                     to_string(w.shape()));
  }
  if (w.is_complex() && !x.is_complex()) {
    throw ShapeError("contract_channels: complex weights " + to_string(w.shape()) +
                     " require complex input, got real " + to_string(x.shape()));
  }
}

// out (c_out x P) = w (c_out x c_in) * x (c_in x P), all row-major.
void gemm_block(const Tensor& w, const double* x, double* out, std::size_t c_in, std::size_t positions,
                bool complex_x) {
  const auto c_out = static_cast<Eigen::Index>(w.shape()[0]);
  const auto ci = static_cast<Eigen::Index>(c_in);
  const auto p = static_cast<Eigen::Index>(positions);
  if (!complex_x) {
    Eigen::Map<const RowMatrix> W(w.data().data(), c_out, ci);
    Eigen::Map<const RowMatrix> X(x, ci, p);
    Eigen::Map<RowMatrix> O(out, c_out, p);
    O.noalias() = W * X;
    return;
  }
  Eigen::Map<const RowCMatrix> X(reinterpret_cast<const cdouble*>(x), ci, p);
  Eigen::Map<RowCMatrix> O(reinterpret_cast<cdouble*>(out), c_out, p);
  if (w.is_complex()) {
    Eigen::Map<const RowCMatrix> W(w.cdata().data(), c_out, ci);
    O.noalias() = W * X;
  } else {
    // Real weights act on the (re, im) planes independently: view the complex
    // row-major block as a real (c_in x 2P) matrix.
    Eigen::Map<const RowMatrix> W(w.data().data(), c_out, ci);
    Eigen::Map<const RowMatrix> Xr(x, ci, 2 * p);
    Eigen::Map<RowMatrix> Or(out, c_out, 2 * p);
    Or.noalias() = W * Xr;
  }
}

}  // namespace

Tensor contract_channels(const Tensor& x, const Tensor& w) {
  check_contract_shapes(x, w, 0);
  Shape out_shape = x.shape();
  out_shape[0] = w.shape()[0];
  Tensor out(out_shape, x.dtype());
  const std::size_t positions = x.numel() / x.shape()[0];
  gemm_block(w, x.raw().data(), out.raw().data(), x.shape()[0], positions, x.is_complex());
  return out;
}

Tensor contract_channels_batched(const Tensor& x, const Tensor& w) {
  check_contract_shapes(x, w, 1);
  Shape out_shape = x.shape();
  out_shape[1] = w.shape()[0];
  Tensor out(out_shape, x.dtype());
  const std::size_t batch = x.shape()[0];
  const std::size_t c_in = x.shape()[1];
  const std::size_t positions = x.numel() / (batch * c_in);
  const std::size_t stride = x.is_complex() ? 2 : 1;
  const std::size_t in_block = c_in * positions * stride;
  const std::size_t out_block = w.shape()[0] * positions * stride;
#pragma omp parallel for schedule(static) if (batch > 1)
  for (std::size_t b = 0; b < batch; ++b) {
    gemm_block(w, x.raw().data() + b * in_block, out.raw().data() + b * out_block, c_in, positions,
               x.is_complex());
  }
  return out;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

Tensor gelu(const Tensor& x) {
  if (x.is_complex()) throw ShapeError("gelu: activation is defined on real tensors only");
  Tensor out(x.shape());
  auto in = x.data();
  auto o = out.data();
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) o[i] = gelu(in[i]);
  return out;
}

}  // namespace gfno
