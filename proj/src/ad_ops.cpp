#include <Eigen/Dense>
#include <cmath>

#include "gfno/autodiff.hpp"
#include "gfno/spectral.hpp"

namespace gfno::ad {

namespace {

using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMat = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMap = Eigen::Map<RMat>;
using CRMap = Eigen::Map<const RMat>;
using CMap = Eigen::Map<CMat>;
using CCMap = Eigen::Map<const CMat>;

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw std::logic_error("Var is not attached to a tape");
  return *a.tape;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("operands live on different tapes");
}

Tensor transpose2(const Tensor& w) {
  const std::size_t r = w.shape()[0], c = w.shape()[1];
  Tensor t({c, r});
  RMap(t.data().data(), c, r) = CRMap(w.data().data(), r, c).transpose();
  return t;
}

}  // namespace

Var add(Var a, Var b) {
  same_tape(a, b);
  return tape_of(a).record("add", a.value() + b.value(), {a, b}, [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  return tape_of(a).record("sub", a.value() - b.value(), {a, b}, [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, g);
    t.accumulate(b, -1.0 * g);
  });
}

Var scale(Var a, double s) {
  return tape_of(a).record("scale", s * a.value(), {a}, [a, s](const Tensor& g, Tape& t) { t.accumulate(a, s * g); });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require_real(a.value(), "mul");
  require_real(b.value(), "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return tape_of(a).record("mul", std::move(out), {a, b}, [a, b](const Tensor& g, Tape& t) {
    Tensor ga = g, gb = g;
    auto av = a.value().data(), bv = b.value().data();
    auto pa = ga.data(), pb = gb.data();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      pa[i] *= bv[i];
      pb[i] *= av[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var sum(Var a) {
  require_real(a.value(), "sum");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record("sum", Tensor::scalar(s), {a}, [a](const Tensor& g, Tape& t) {
    Tensor ga(a.value().shape());
    ga.fill(g.item());
    t.accumulate(a, ga);
  });
}

Var gelu(Var a) {
  return tape_of(a).record("gelu", gfno::gelu(a.value()), {a}, [a](const Tensor& g, Tape& t) {
    Tensor ga = g;
    auto p = ga.data();
    auto x = a.value().data();
    const long n = static_cast<long>(p.size());
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long i = 0; i < n; ++i) p[i] *= gelu_derivative(x[i]);
    t.accumulate(a, ga);
  });
}

Var contract(Var x, Var w) {
  same_tape(x, w);
  require_real(x.value(), "contract");
  require_real(w.value(), "contract");
  Tensor out = contract_channels_batched(x.value(), w.value());
  return tape_of(x).record("contract", std::move(out), {x, w}, [x, w](const Tensor& g, Tape& t) {
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (t.needs_grad(x)) t.accumulate(x, contract_channels_batched(g, transpose2(wv)));
    if (t.needs_grad(w)) {
      const std::size_t batch = xv.shape()[0], c_in = xv.shape()[1], c_out = wv.shape()[0];
      const std::size_t pos = xv.numel() / (batch * c_in);
      Tensor gw(wv.shape());
      RMap acc(gw.data().data(), c_out, c_in);
      for (std::size_t b = 0; b < batch; ++b) {
        CRMap gb(g.data().data() + b * c_out * pos, c_out, pos);
        CRMap xb(xv.data().data() + b * c_in * pos, c_in, pos);
        acc.noalias() += gb * xb.transpose();
      }
      t.accumulate(w, gw);
    }
  });
}

Var add_channel_bias(Var x, Var bias) {
  same_tape(x, bias);
  const Tensor& xv = x.value();
  require_real(xv, "add_channel_bias");
  const std::size_t m = bias.value().numel();
  if (xv.rank() < 2 || bias.value().rank() != 1 || xv.shape()[1] % m != 0) {
    throw ShapeError("add_channel_bias: x " + to_string(xv.shape()) + " incompatible with bias " +
                     to_string(bias.value().shape()));
  }
  const std::size_t batch = xv.shape()[0], channels = xv.shape()[1], rep = channels / m;
  const std::size_t pos = xv.numel() / (batch * channels);
  Tensor out = xv;
  auto o = out.data();
  auto bv = bias.value().data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      double* p = o.data() + (b * channels + c) * pos;
      for (std::size_t i = 0; i < pos; ++i) p[i] += bv[c / rep];
    }
  return tape_of(x).record("add_channel_bias", std::move(out), {x, bias},
                           [x, bias, batch, channels, rep, pos](const Tensor& g, Tape& t) {
                             t.accumulate(x, g);
                             if (!t.needs_grad(bias)) return;
                             Tensor gb(bias.value().shape());
                             auto pg = gb.data();
                             auto src = g.data();
                             for (std::size_t b = 0; b < batch; ++b)
                               for (std::size_t c = 0; c < channels; ++c) {
                                 const double* p = src.data() + (b * channels + c) * pos;
                                 double s = 0.0;
                                 for (std::size_t i = 0; i < pos; ++i) s += p[i];
                                 pg[c / rep] += s;
                               }
                             t.accumulate(bias, gb);
                           });
}

Var linear_map(Var x, std::shared_ptr<const SparseMap> map) {
  Tensor out = map->apply(x.value());
  return tape_of(x).record("linear_map", std::move(out), {x},
                           [x, map](const Tensor& g, Tape& t) { t.accumulate(x, map->adjoint(g)); });
}

Var spectral_conv(Var x, Var kernel, std::size_t k) {
  same_tape(x, kernel);
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  require_real(xv, "spectral_conv");
  require_complex(kv, "spectral_conv");
  if (xv.rank() != 4) throw ShapeError("spectral_conv: expected x (B, C, n_x, n_y), got " + to_string(xv.shape()));
  const std::size_t batch = xv.shape()[0], c_in = xv.shape()[1], nx = xv.shape()[2], ny = xv.shape()[3];
  const std::size_t modes = (2 * k - 1) * k;
  if (kv.rank() != 3 || kv.shape()[0] != modes || kv.shape()[2] != c_in) {
    throw ShapeError("spectral_conv: kernel " + to_string(kv.shape()) + " incompatible with input " +
                     to_string(xv.shape()) + " at k=" + std::to_string(k));
  }
  const std::size_t c_out = kv.shape()[1];

  // Mode-major copies keep each per-mode product a contiguous GEMM.
  const Tensor band = spectral::band_rdft(xv, k);
  auto xm = std::make_shared<Tensor>(Shape{modes, c_in, batch}, DType::complex128);
  {
    auto src = band.cdata();
    auto dst = xm->cdata();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c_in; ++i)
        for (std::size_t m = 0; m < modes; ++m) dst[(m * c_in + i) * batch + b] = src[(b * c_in + i) * modes + m];
  }
  Tensor yband({batch, c_out, 2 * k - 1, k}, DType::complex128);
  {
    auto dst = yband.cdata();
    auto kd = kv.cdata();
    auto xd = xm->cdata();
#pragma omp parallel
    {
      CMat y(c_out, batch);
#pragma omp for schedule(static)
      for (long m = 0; m < static_cast<long>(modes); ++m) {
        y.noalias() = CCMap(kd.data() + m * c_out * c_in, c_out, c_in) * CCMap(xd.data() + m * c_in * batch, c_in, batch);
        for (std::size_t o = 0; o < c_out; ++o)
          for (std::size_t b = 0; b < batch; ++b) dst[(b * c_out + o) * modes + m] = y(o, b);
      }
    }
  }
  Tensor out = spectral::band_irdft(yband, nx, ny);
  return tape_of(x).record(
      "spectral_conv", std::move(out), {x, kernel},
      [x, kernel, xm, k, batch, c_in, c_out, modes, nx, ny](const Tensor& g, Tape& t) {
        const Tensor gband = spectral::band_irdft_adjoint(g, k);
        CMat gy_all(static_cast<long>(modes * c_out), static_cast<long>(batch));
        {
          auto src = gband.cdata();
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < c_out; ++o)
              for (std::size_t m = 0; m < modes; ++m) gy_all(m * c_out + o, b) = src[(b * c_out + o) * modes + m];
        }
        const auto kd = kernel.value().cdata();
        const auto xd = xm->cdata();
        const bool want_k = t.needs_grad(kernel), want_x = t.needs_grad(x);
        Tensor gk(kernel.value().shape(), DType::complex128);
        Tensor gxband({batch, c_in, 2 * k - 1, k}, DType::complex128);
        auto gkd = gk.cdata();
        auto gxd = gxband.cdata();
#pragma omp parallel
        {
          CMat gx(c_in, batch);
#pragma omp for schedule(static)
          for (long m = 0; m < static_cast<long>(modes); ++m) {
            const auto gy = gy_all.block(m * c_out, 0, c_out, batch);
            if (want_k) {
              CMap(gkd.data() + m * c_out * c_in, c_out, c_in).noalias() =
                  gy * CCMap(xd.data() + m * c_in * batch, c_in, batch).adjoint();
            }
            if (want_x) {
              gx.noalias() = CCMap(kd.data() + m * c_out * c_in, c_out, c_in).adjoint() * gy;
              for (std::size_t i = 0; i < c_in; ++i)
                for (std::size_t b = 0; b < batch; ++b) gxd[(b * c_in + i) * modes + m] = gx(i, b);
            }
          }
        }
        if (want_k) t.accumulate(kernel, gk);
        if (want_x) t.accumulate(x, spectral::band_rdft_adjoint(gxband, nx, ny));
      });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor& first = parts.front().value();
  if (first.rank() < 2) throw ShapeError("concat_channels: need (B, C, ...) inputs, got " + to_string(first.shape()));
  Shape out_shape = first.shape();
  out_shape[1] = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    const Tensor& v = p.value();
    Shape a = v.shape(), b = first.shape();
    if (a.size() != b.size() || v.is_complex() != first.is_complex()) {
      throw ShapeError("concat_channels: " + to_string(v.shape()) + " vs " + to_string(first.shape()));
    }
    a[1] = b[1] = 0;
    if (a != b) throw ShapeError("concat_channels: " + to_string(v.shape()) + " vs " + to_string(first.shape()));
    out_shape[1] += v.shape()[1];
    widths.push_back(v.shape()[1]);
  }
  const std::size_t batch = first.shape()[0];
  const std::size_t width = first.is_complex() ? 2 : 1;
  const std::size_t pos = first.numel() / (batch * first.shape()[1]) * width;
  Tensor out(out_shape, first.dtype());
  const std::size_t total = out_shape[1];
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto src = parts[p].value().raw();
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(src.data() + b * widths[p] * pos, widths[p] * pos, out.raw().data() + (b * total + offset) * pos);
    offset += widths[p];
  }
  return tape_of(parts.front())
      .record("concat_channels", std::move(out), parts, [parts, widths, batch, pos, total](const Tensor& g, Tape& t) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < parts.size(); ++p) {
          if (t.needs_grad(parts[p])) {
            Tensor gp = Tensor::zeros_like(parts[p].value());
            for (std::size_t b = 0; b < batch; ++b)
              std::copy_n(g.raw().data() + (b * total + off) * pos, widths[p] * pos, gp.raw().data() + b * widths[p] * pos);
            t.accumulate(parts[p], gp);
          }
          off += widths[p];
        }
      });
}

Var slice_channels(Var x, std::size_t start, std::size_t count) {
  const Tensor& v = x.value();
  if (v.rank() < 2 || count == 0 || start + count > v.shape()[1]) {
    throw ShapeError("slice_channels: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + to_string(v.shape()));
  }
  const std::size_t batch = v.shape()[0], total = v.shape()[1];
  const std::size_t pos = v.numel() / (batch * total) * (v.is_complex() ? 2 : 1);
  Shape out_shape = v.shape();
  out_shape[1] = count;
  Tensor out(out_shape, v.dtype());
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(v.raw().data() + (b * total + start) * pos, count * pos, out.raw().data() + b * count * pos);
  return tape_of(x).record("slice_channels", std::move(out), {x},
                           [x, start, count, batch, total, pos](const Tensor& g, Tape& t) {
                             Tensor gx = Tensor::zeros_like(x.value());
                             for (std::size_t b = 0; b < batch; ++b)
                               std::copy_n(g.raw().data() + b * count * pos, count * pos,
                                           gx.raw().data() + (b * total + start) * pos);
                             t.accumulate(x, gx);
                           });
}

Var rel_l2_loss(Var pred, const Tensor& target) {
  const Tensor& p = pred.value();
  require_real(p, "rel_l2_loss");
  require_same_shape(p, target, "rel_l2_loss");
  const std::size_t batch = p.shape().empty() ? 1 : p.shape()[0];
  const std::size_t per = p.numel() / batch;
  std::vector<double> res(batch), tn(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double r = 0.0, y = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      const double d = p.data()[i] - target.data()[i];
      r += d * d;
      y += target.data()[i] * target.data()[i];
    }
    if (y == 0.0) throw std::domain_error("rel_l2_loss: target item " + std::to_string(b) + " has zero norm");
    res[b] = std::sqrt(r);
    tn[b] = std::sqrt(y);
    loss += res[b] / tn[b];
  }
  loss /= static_cast<double>(batch);
  return tape_of(pred).record("rel_l2_loss", Tensor::scalar(loss), {pred},
                              [pred, target, res, tn, batch, per](const Tensor& g, Tape& t) {
                                Tensor gp = Tensor::zeros_like(pred.value());
                                auto o = gp.data();
                                for (std::size_t b = 0; b < batch; ++b) {
                                  if (res[b] == 0.0) continue;
                                  const double c = g.item() / (static_cast<double>(batch) * res[b] * tn[b]);
                                  for (std::size_t i = b * per; i < (b + 1) * per; ++i)
                                    o[i] = c * (pred.value().data()[i] - target.data()[i]);
                                }
                                t.accumulate(pred, gp);
                              });
}

}  // namespace gfno::ad
