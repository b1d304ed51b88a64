#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gfno/tensor.hpp"

/// Tape-based reverse-mode differentiation over the fixed op set the model
/// needs. Complex values carry gradients as (dL/dRe + i dL/dIm), i.e. real
/// and imaginary parts are treated as independent reals.
namespace gfno::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name, Tensor value);
  void zero_grad() { grad.fill(0.0); }
  /// Real scalars held (complex entries count twice).
  std::size_t size() const { return value.raw().size(); }
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  /// Receives the output gradient; pushes input gradients with accumulate().
  using BackwardFn = std::function<void(const Tensor& grad_out, Tape& tape)>;

  Var constant(Tensor value);
  Var param(Parameter& p);
  /// Records a node. Throws NonFiniteError naming `op` if value has NaN/Inf.
  Var record(std::string op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  void accumulate(Var v, const Tensor& g);

  /// Seeds d loss / d loss = 1; loss must be a real single-element node.
  void backward(Var loss);
  /// Seeds an arbitrary output gradient (shape must match).
  void backward(Var out, const Tensor& seed);
  void reset();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  bool done_ = false;
};

/// Fixed R-linear map out[j] = sum_k w_k * conj^{c_k}(src[i_k]) stored as CSR
/// rows over flat element indices. Covers index permutations, weight
/// sharing, Hermitian extension/projection and orbit averaging.
struct SparseMap {
  Shape in_shape;
  Shape out_shape;
  bool complex = false;
  std::vector<std::size_t> row_ptr;  // out numel + 1
  std::vector<std::size_t> src;
  std::vector<double> weight;
  std::vector<std::uint8_t> conj;

  Tensor apply(const Tensor& x) const;
  Tensor adjoint(const Tensor& g) const;
  /// this o inner (apply inner first).
  SparseMap after(const SparseMap& inner) const;
};

/// Incremental CSR construction, one output element at a time in order.
class SparseMapBuilder {
 public:
  SparseMapBuilder(Shape in_shape, Shape out_shape, bool complex);
  void add(std::size_t src, double weight, bool conj = false);
  void next_row();
  SparseMap finish();

 private:
  SparseMap map_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var mul(Var a, Var b);
Var sum(Var a);
Var gelu(Var a);
/// x (B, c_in, ...) against w (c_out, c_in), both real.
Var contract(Var x, Var w);
/// x (B, C, ...) plus bias (m), channel c receives bias[c / (C / m)].
Var add_channel_bias(Var x, Var bias);
Var linear_map(Var x, std::shared_ptr<const SparseMap> map);
/// x (B, C_in, n_x, n_y) real, kernel (M, C_out, C_in) complex over the
/// M = (2k-1)k half-band modes in band_rdft order.
Var spectral_conv(Var x, Var kernel, std::size_t k);
/// Concatenation / slicing along axis 1.
Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(Var x, std::size_t start, std::size_t count);
/// Mean over axis 0 of ||pred_b - target_b|| / ||target_b||.
Var rel_l2_loss(Var pred, const Tensor& target);

struct GradCheckResult {
  /// Worst per-scalar error: relative, or absolute where |grad| < 1e-8.
  double max_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  /// max over parameters of ||grad - fd|| / ||fd|| over the whole tensor.
  double max_tensor_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Central differences with step eps over every real scalar of every param.
GradCheckResult grad_check(const std::function<Var(Tape&)>& f, const std::vector<Parameter*>& params,
                           double eps = 1e-5);

}  // namespace gfno::ad
