#include "gfno/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gfno::ad {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros_like(value)) {}

const Tensor& Var::value() const {
  if (tape == nullptr) throw std::logic_error("Var is not attached to a tape");
  return tape->value(id);
}

Var Tape::constant(Tensor value) {
  if (done_) throw std::logic_error("tape already differentiated; call reset() before recording");
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  if (done_) throw std::logic_error("tape already differentiated; call reset() before recording");
  if (p.grad.shape() != p.value.shape() || p.grad.dtype() != p.value.dtype()) p.grad = Tensor::zeros_like(p.value);
  Node n;
  n.op = "param:" + p.name;
  n.value = p.value;
  n.needs_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(std::string op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  if (done_) throw std::logic_error("tape already differentiated; call reset() before recording");
  if (!all_finite(value)) throw NonFiniteError(op, "output shape " + to_string(value.shape()));
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) throw std::logic_error("op '" + n.op + "' mixes variables from different tapes");
    n.needs_grad = n.needs_grad || nodes_[v.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) throw std::logic_error("no gradient reached node '" + n.op + "'");
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_.at(v.id);
  if (!n.needs_grad) return;
  if (g.shape() != n.value.shape() || g.dtype() != n.value.dtype()) {
    throw ShapeError("gradient " + to_string(g.shape()) + "/" + to_string(g.dtype()) + " does not match node '" +
                     n.op + "' value " + to_string(n.value.shape()) + "/" + to_string(n.value.dtype()));
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.raw();
  auto src = g.raw();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  const Tensor& v = nodes_.at(loss.id).value;
  if (v.is_complex() || v.numel() != 1) {
    throw ShapeError("backward: loss must be a real scalar, got " + to_string(v.shape()) + "/" + to_string(v.dtype()));
  }
  Tensor seed(v.shape());
  seed.fill(1.0);
  backward(loss, seed);
}

void Tape::backward(Var out, const Tensor& seed) {
  if (done_) throw std::logic_error("backward called twice on the same tape without reset()");
  done_ = true;
  accumulate(out, seed);
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad) continue;
    if (n.param != nullptr) {
      auto dst = n.param->grad.raw();
      auto src = n.grad.raw();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    } else if (n.backward) {
      const Tensor g = std::move(n.grad);
      n.grad = Tensor();
      n.backward(g, *this);
      n.grad = g;
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  done_ = false;
}

Tensor SparseMap::apply(const Tensor& x) const {
  if (x.shape() != in_shape || x.is_complex() != complex) {
    throw ShapeError("SparseMap::apply: expected " + to_string(in_shape) + ", got " + to_string(x.shape()));
  }
  Tensor out(out_shape, complex ? DType::complex128 : DType::real64);
  const long rows = static_cast<long>(row_ptr.size() - 1);
  if (complex) {
    auto in = x.cdata();
    auto o = out.cdata();
#pragma omp parallel for schedule(static) if (rows > 4096)
    for (long j = 0; j < rows; ++j) {
      cdouble acc{};
      for (std::size_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) {
        const cdouble v = in[src[e]];
        acc += weight[e] * (conj[e] ? std::conj(v) : v);
      }
      o[j] = acc;
    }
  } else {
    auto in = x.data();
    auto o = out.data();
#pragma omp parallel for schedule(static) if (rows > 4096)
    for (long j = 0; j < rows; ++j) {
      double acc = 0.0;
      for (std::size_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) acc += weight[e] * in[src[e]];
      o[j] = acc;
    }
  }
  return out;
}

Tensor SparseMap::adjoint(const Tensor& g) const {
  if (g.shape() != out_shape || g.is_complex() != complex) {
    throw ShapeError("SparseMap::adjoint: expected " + to_string(out_shape) + ", got " + to_string(g.shape()));
  }
  Tensor out(in_shape, complex ? DType::complex128 : DType::real64);
  const std::size_t rows = row_ptr.size() - 1;
  if (complex) {
    auto in = g.cdata();
    auto o = out.cdata();
    for (std::size_t j = 0; j < rows; ++j)
      for (std::size_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) o[src[e]] += weight[e] * (conj[e] ? std::conj(in[j]) : in[j]);
  } else {
    auto in = g.data();
    auto o = out.data();
    for (std::size_t j = 0; j < rows; ++j)
      for (std::size_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) o[src[e]] += weight[e] * in[j];
  }
  return out;
}

SparseMap SparseMap::after(const SparseMap& inner) const {
  if (inner.out_shape != in_shape || inner.complex != complex) {
    throw ShapeError("SparseMap::after: inner output " + to_string(inner.out_shape) + " does not feed " +
                     to_string(in_shape));
  }
  SparseMapBuilder b(inner.in_shape, out_shape, complex);
  std::map<std::pair<std::size_t, std::uint8_t>, double> row;
  for (std::size_t j = 0; j + 1 < row_ptr.size(); ++j) {
    row.clear();
    for (std::size_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) {
      const std::size_t mid = src[e];
      for (std::size_t f = inner.row_ptr[mid]; f < inner.row_ptr[mid + 1]; ++f) {
        row[{inner.src[f], static_cast<std::uint8_t>(conj[e] ^ inner.conj[f])}] += weight[e] * inner.weight[f];
      }
    }
    for (const auto& [key, w] : row)
      if (w != 0.0) b.add(key.first, w, key.second != 0);
    b.next_row();
  }
  return b.finish();
}

SparseMapBuilder::SparseMapBuilder(Shape in_shape, Shape out_shape, bool complex) {
  map_.in_shape = std::move(in_shape);
  map_.out_shape = std::move(out_shape);
  map_.complex = complex;
  map_.row_ptr.push_back(0);
}

void SparseMapBuilder::add(std::size_t src, double weight, bool conj) {
  if (src >= shape_numel(map_.in_shape)) throw std::out_of_range("SparseMapBuilder: source index out of range");
  map_.src.push_back(src);
  map_.weight.push_back(weight);
  map_.conj.push_back(conj ? 1 : 0);
}

void SparseMapBuilder::next_row() { map_.row_ptr.push_back(map_.src.size()); }

SparseMap SparseMapBuilder::finish() {
  if (map_.row_ptr.size() != shape_numel(map_.out_shape) + 1) {
    throw std::logic_error("SparseMapBuilder: " + std::to_string(map_.row_ptr.size() - 1) + " rows built for output " +
                           to_string(map_.out_shape));
  }
  return std::move(map_);
}

GradCheckResult grad_check(const std::function<Var(Tape&)>& f, const std::vector<Parameter*>& params, double eps) {
  GradCheckResult result;
  {
    Tape tape;
    const Var loss = f(tape);
    for (Parameter* p : params) p->zero_grad();
    tape.backward(loss);
  }
  auto evaluate = [&] {
    Tape tape;
    return f(tape).value().item();
  };
  for (Parameter* p : params) {
    auto raw = p->value.raw();
    const auto analytic = p->grad.raw();
    double diff2 = 0.0, fd2 = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double saved = raw[i];
      raw[i] = saved + eps;
      const double up = evaluate();
      raw[i] = saved - eps;
      const double down = evaluate();
      raw[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double g = analytic[i];
      const double diff = std::abs(g - fd);
      diff2 += diff * diff;
      fd2 += fd * fd;
      const double err = std::abs(g) < 1e-8 ? diff : diff / std::abs(g);
      ++result.checked;
      if (err > result.max_error || result.worst_param.empty()) {
        result.max_error = err;
        result.worst_param = p->name;
        result.worst_index = i;
      }
    }
    const double terr = fd2 > 0.0 ? std::sqrt(diff2 / fd2) : std::sqrt(diff2);
    if (terr > result.max_tensor_error || result.worst_tensor.empty()) {
      result.max_tensor_error = terr;
      result.worst_tensor = p->name;
    }
  }
  return result;
}

}  // namespace gfno::ad
