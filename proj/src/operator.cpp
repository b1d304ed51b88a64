#include "gfno/operator.hpp"

#include <cmath>
#include <random>

#include "gfno/spectral.hpp"

namespace gfno::model {

using group::Group;
using group::StabilizerElement;

Variant parse_variant(const std::string& s) {
  if (s == "gfno") return Variant::gfno;
  if (s == "fno") return Variant::fno;
  if (s == "radial-fno") return Variant::radial_fno;
  throw std::invalid_argument("unknown model variant '" + s + "' (expected gfno, fno or radial-fno)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::gfno: return "gfno";
    case Variant::fno: return "fno";
    case Variant::radial_fno: return "radial-fno";
  }
  return "?";
}

PosEnc parse_pos_enc(const std::string& s) {
  if (s == "none") return PosEnc::none;
  if (s == "symmetric") return PosEnc::symmetric;
  if (s == "cartesian") return PosEnc::cartesian;
  throw std::invalid_argument("unknown positional encoding '" + s + "' (expected none, symmetric or cartesian)");
}

std::string to_string(PosEnc p) {
  switch (p) {
    case PosEnc::none: return "none";
    case PosEnc::symmetric: return "symmetric";
    case PosEnc::cartesian: return "cartesian";
  }
  return "?";
}

std::size_t ModelConfig::d_g() const { return group::order(stack_group()); }

Group ModelConfig::stack_group() const { return variant == Variant::gfno ? group : Group::none; }

std::size_t ModelConfig::pos_channels() const {
  switch (pos_enc) {
    case PosEnc::none: return 0;
    case PosEnc::symmetric: return 1;
    case PosEnc::cartesian: return 2;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (d_z == 0 || k == 0 || in_steps == 0) throw std::invalid_argument("model config: d_z, k and in_steps must be positive");
  if (variant == Variant::fno && group != Group::none) {
    throw std::invalid_argument("model config: variant fno requires group none");
  }
  if (variant != Variant::fno && group == Group::none) {
    throw std::invalid_argument("model config: variant " + to_string(variant) + " needs group p4 or p4m");
  }
}

namespace {

std::size_t band_of(const Tensor& bank, const char* what) {
  if (bank.rank() < 2 || bank.extent(-1) != bank.extent(-2) || bank.extent(-1) % 2 == 0) {
    throw ShapeError(std::string(what) + ": expected odd square centered band, got " + gfno::to_string(bank.shape()));
  }
  return bank.extent(-1);
}

Shape concat_shape(const Shape& prefix, std::initializer_list<std::size_t> tail) {
  Shape s = prefix;
  s.insert(s.end(), tail);
  return s;
}

}  // namespace

Tensor hermitian_project(const Tensor& bank) {
  require_complex(bank, "hermitian_project");
  const std::size_t b = band_of(bank, "hermitian_project");
  Tensor out(bank.shape(), DType::complex128);
  auto src = bank.cdata();
  auto dst = out.cdata();
  const std::size_t slices = bank.numel() / (b * b);
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        const std::size_t here = s * b * b + i * b + j;
        const std::size_t mirror = s * b * b + (b - 1 - i) * b + (b - 1 - j);
        dst[here] = 0.5 * (src[here] + std::conj(src[mirror]));
      }
  return out;
}

Tensor radial_tie(const Tensor& bank, Group g) {
  band_of(bank, "radial_tie");
  Tensor acc = Tensor::zeros_like(bank);
  const auto els = group::elements(g);
  for (const auto& s : els) acc = acc + group::act_spectrum(s, bank);
  return (1.0 / static_cast<double>(els.size())) * acc;
}

Tensor gconv_freq_complex(const Tensor& f, const Tensor& bank, Group g) {
  require_real(f, "gconv_freq");
  require_complex(bank, "gconv_freq");
  const std::size_t dg = group::order(g);
  if (f.rank() != 4 || f.shape()[1] != dg) {
    throw ShapeError("gconv_freq: feature map " + gfno::to_string(f.shape()) + " needs stabilizer axis " +
                     std::to_string(dg));
  }
  const std::size_t b = band_of(bank, "gconv_freq");
  const std::size_t d_in = f.shape()[0], n = f.shape()[2];
  if (bank.rank() != 5 || bank.shape()[1] != d_in || bank.shape()[2] != dg) {
    throw ShapeError("gconv_freq: bank " + gfno::to_string(bank.shape()) + " incompatible with feature map " +
                     gfno::to_string(f.shape()));
  }
  if (b > n || b > f.shape()[3]) {
    throw ShapeError("gconv_freq: band " + std::to_string(b) + " exceeds grid " + gfno::to_string(f.shape()));
  }
  const std::size_t d_out = bank.shape()[0], k = (b + 1) / 2, bb = b * b;
  const Tensor fb = spectral::truncate_band(spectral::dft2(f, spectral::Layout::centered), k);
  const auto els = group::elements(g);
  Tensor out_band({d_out, dg, b, b}, DType::complex128);
  auto ob = out_band.cdata();
  auto fd = fb.cdata();
  for (const auto& t : els) {
    const Tensor rotated = group::act_spectrum(t, bank);
    auto rd = rotated.cdata();
    const StabilizerElement tinv = group::stab_inverse(t);
    for (std::size_t o = 0; o < d_out; ++o)
      for (const auto& s : els) {
        const std::size_t u = group::stab_compose(tinv, s).index();
        for (std::size_t i = 0; i < d_in; ++i) {
          const cdouble* r = rd.data() + ((o * d_in + i) * dg + u) * bb;
          const cdouble* x = fd.data() + (i * dg + s.index()) * bb;
          cdouble* y = ob.data() + (o * dg + t.index()) * bb;
          for (std::size_t e = 0; e < bb; ++e) y[e] += r[e] * x[e];
        }
      }
  }
  return spectral::idft2(spectral::pad_band(out_band, n, f.shape()[3]), spectral::Layout::centered);
}

Tensor gconv_freq(const Tensor& f, const Tensor& bank, Group g) { return gconv_freq_complex(f, bank, g).real_part(); }

Tensor gconv_1x1(const Tensor& f, const Tensor& w, Group g) {
  require_real(f, "gconv_1x1");
  const std::size_t dg = group::order(g);
  if (f.rank() != 4 || f.shape()[1] != dg || w.rank() != 3 || w.shape()[1] != f.shape()[0] || w.shape()[2] != dg) {
    throw ShapeError("gconv_1x1: feature map " + gfno::to_string(f.shape()) + " incompatible with weights " +
                     gfno::to_string(w.shape()));
  }
  const std::size_t d_out = w.shape()[0], d_in = f.shape()[0];
  const std::size_t plane = f.shape()[2] * f.shape()[3];
  Tensor out({d_out, dg, f.shape()[2], f.shape()[3]});
  const auto els = group::elements(g);
  auto o = out.data();
  auto x = f.data();
  auto wd = w.data();
  for (const auto& t : els) {
    const StabilizerElement tinv = group::stab_inverse(t);
    for (const auto& s : els) {
      const std::size_t u = group::stab_compose(tinv, s).index();
      for (std::size_t a = 0; a < d_out; ++a)
        for (std::size_t i = 0; i < d_in; ++i) {
          const double c = wd[(a * d_in + i) * dg + u];
          const double* src = x.data() + (i * dg + s.index()) * plane;
          double* dst = o.data() + (a * dg + t.index()) * plane;
          for (std::size_t p = 0; p < plane; ++p) dst[p] += c * src[p];
        }
    }
  }
  return out;
}

Tensor gmlp(const Tensor& f, const Tensor& w1, const Tensor& w2, Group g) {
  return gconv_1x1(gfno::gelu(gconv_1x1(f, w1, g)), w2, g);
}

Tensor lift(const Tensor& x, const Tensor& w, Group g) {
  const Tensor h = contract_channels(x, w);
  const std::size_t dg = group::order(g), d = h.shape()[0];
  const std::size_t plane = h.numel() / d;
  Tensor out({d, dg, h.shape()[1], h.shape()[2]});
  for (std::size_t o = 0; o < d; ++o)
    for (std::size_t s = 0; s < dg; ++s)
      std::copy_n(h.data().data() + o * plane, plane, out.data().data() + (o * dg + s) * plane);
  return out;
}

Tensor project(const Tensor& f, const Tensor& w) {
  if (f.rank() != 4) throw ShapeError("project: expected (d_z, d_g, n, n), got " + gfno::to_string(f.shape()));
  const std::size_t d = f.shape()[0], dg = f.shape()[1], plane = f.shape()[2] * f.shape()[3];
  Tensor mean({d, f.shape()[2], f.shape()[3]});
  for (std::size_t o = 0; o < d; ++o)
    for (std::size_t s = 0; s < dg; ++s)
      for (std::size_t p = 0; p < plane; ++p)
        mean.data()[o * plane + p] += f.data()[(o * dg + s) * plane + p] / static_cast<double>(dg);
  return contract_channels(mean, w);
}

Tensor pos_encoding(PosEnc kind, std::size_t n) {
  if (n == 0) throw std::invalid_argument("pos_encoding: n must be positive");
  const double nd = static_cast<double>(n);
  switch (kind) {
    case PosEnc::none:
      return Tensor();
    case PosEnc::symmetric: {
      Tensor out({1, n, n});
      const double c = (nd - 1.0) / 2.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out.data()[i * n + j] = std::hypot(static_cast<double>(i) - c, static_cast<double>(j) - c) / nd;
      return out;
    }
    case PosEnc::cartesian: {
      Tensor out({2, n, n});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          out.data()[i * n + j] = static_cast<double>(i) / nd;
          out.data()[n * n + i * n + j] = static_cast<double>(j) / nd;
        }
      return out;
    }
  }
  throw std::invalid_argument("pos_encoding: unknown kind");
}

ad::SparseMap hermitian_extend_map(const Shape& prefix, std::size_t k) {
  const std::size_t b = 2 * k - 1, slices = shape_numel(prefix);
  const long h = static_cast<long>(k) - 1;
  ad::SparseMapBuilder m(concat_shape(prefix, {b, k}), concat_shape(prefix, {b, b}), true);
  for (std::size_t s = 0; s < slices; ++s)
    for (long r = 0; r < static_cast<long>(b); ++r)
      for (long c = 0; c < static_cast<long>(b); ++c) {
        const long x1 = r - h, x2 = c - h;
        if (x2 >= 0) {
          m.add(s * b * k + static_cast<std::size_t>(r) * k + static_cast<std::size_t>(x2), 1.0);
        } else {
          m.add(s * b * k + static_cast<std::size_t>(-x1 + h) * k + static_cast<std::size_t>(-x2), 1.0, true);
        }
        m.next_row();
      }
  return m.finish();
}

ad::SparseMap hermitian_project_map(const Shape& prefix, std::size_t k) {
  const std::size_t b = 2 * k - 1, slices = shape_numel(prefix);
  const Shape shape = concat_shape(prefix, {b, b});
  ad::SparseMapBuilder m(shape, shape, true);
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        m.add(s * b * b + i * b + j, 0.5);
        m.add(s * b * b + (b - 1 - i) * b + (b - 1 - j), 0.5, true);
        m.next_row();
      }
  return m.finish();
}

ad::SparseMap radial_tie_map(const Shape& prefix, std::size_t k, Group g) {
  const std::size_t b = 2 * k - 1, slices = shape_numel(prefix);
  const long h = static_cast<long>(k) - 1;
  const Shape shape = concat_shape(prefix, {b, b});
  const auto els = group::elements(g);
  const double w = 1.0 / static_cast<double>(els.size());
  ad::SparseMapBuilder m(shape, shape, true);
  for (std::size_t s = 0; s < slices; ++s)
    for (long i = 0; i < static_cast<long>(b); ++i)
      for (long j = 0; j < static_cast<long>(b); ++j) {
        for (const auto& e : els) {
          const auto u = group::stab_inverse(e).matrix().apply(i - h, j - h);
          m.add(s * b * b + static_cast<std::size_t>((u[0] + h) * static_cast<long>(b) + u[1] + h), w);
        }
        m.next_row();
      }
  return m.finish();
}

ad::SparseMap group_expand_map(std::size_t d_out, std::size_t d_in, Group g, std::size_t k) {
  const std::size_t b = 2 * k - 1, dg = group::order(g), modes = b * k;
  const long h = static_cast<long>(k) - 1;
  const auto els = group::elements(g);
  ad::SparseMapBuilder m({d_out, d_in, dg, b, b}, {modes, d_out * dg, d_in * dg}, true);
  for (std::size_t mode = 0; mode < modes; ++mode) {
    const long x1 = static_cast<long>(mode / k) - h, x2 = static_cast<long>(mode % k);
    for (std::size_t o = 0; o < d_out; ++o)
      for (const auto& t : els) {
        const StabilizerElement tinv = group::stab_inverse(t);
        const auto eta = tinv.matrix().apply(x1, x2);
        const std::size_t at = static_cast<std::size_t>((eta[0] + h) * static_cast<long>(b) + eta[1] + h);
        for (std::size_t i = 0; i < d_in; ++i)
          for (const auto& s : els) {
            const std::size_t u = group::stab_compose(tinv, s).index();
            m.add(((o * d_in + i) * dg + u) * b * b + at, 1.0);
            m.next_row();
          }
      }
  }
  return m.finish();
}

ad::SparseMap gconv1x1_expand_map(std::size_t d_out, std::size_t d_in, Group g) {
  const std::size_t dg = group::order(g);
  const auto els = group::elements(g);
  ad::SparseMapBuilder m({d_out, d_in, dg}, {d_out * dg, d_in * dg}, false);
  for (std::size_t o = 0; o < d_out; ++o)
    for (const auto& t : els) {
      const StabilizerElement tinv = group::stab_inverse(t);
      for (std::size_t i = 0; i < d_in; ++i)
        for (const auto& s : els) {
          m.add((o * d_in + i) * dg + group::stab_compose(tinv, s).index(), 1.0);
          m.next_row();
        }
    }
  return m.finish();
}

namespace {

ad::SparseMap replicate_rows_map(std::size_t d, std::size_t c_in, std::size_t dg) {
  ad::SparseMapBuilder m({d, c_in}, {d * dg, c_in}, false);
  for (std::size_t o = 0; o < d; ++o)
    for (std::size_t s = 0; s < dg; ++s)
      for (std::size_t i = 0; i < c_in; ++i) {
        m.add(o * c_in + i, 1.0);
        m.next_row();
      }
  return m.finish();
}

ad::SparseMap mean_cols_map(std::size_t c_out, std::size_t d, std::size_t dg) {
  ad::SparseMapBuilder m({c_out, d}, {c_out, d * dg}, false);
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t s = 0; s < dg; ++s) {
        m.add(o * d + i, 1.0 / static_cast<double>(dg));
        m.next_row();
      }
  return m.finish();
}

Tensor uniform(Shape shape, DType dtype, double scale, std::mt19937_64& rng) {
  Tensor t(std::move(shape), dtype);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : t.raw()) v = u(rng);
  return t;
}

}  // namespace

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg_.d_z, dg = cfg_.d_g(), k = cfg_.k, b = 2 * k - 1;
  const std::size_t c_in = cfg_.in_steps + cfg_.pos_channels();
  auto add = [&](const std::string& name, Tensor v) { params_.push_back(std::make_unique<ad::Parameter>(name, std::move(v))); };

  const double lift_scale = 1.0 / std::sqrt(static_cast<double>(c_in));
  add("lift.w", uniform({d, c_in}, DType::real64, lift_scale, rng));
  add("lift.b", uniform({d}, DType::real64, lift_scale, rng));
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(d * dg));
  const double spec_scale = 1.0 / static_cast<double>(d * dg);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "spectral", uniform({d, d, dg, b, k}, DType::complex128, spec_scale, rng));
    add(p + "w", uniform({d, d, dg}, DType::real64, mix_scale, rng));
    add(p + "b", uniform({d}, DType::real64, mix_scale, rng));
    add(p + "mlp1.w", uniform({d, d, dg}, DType::real64, mix_scale, rng));
    add(p + "mlp1.b", uniform({d}, DType::real64, mix_scale, rng));
    add(p + "mlp2.w", uniform({d, d, dg}, DType::real64, mix_scale, rng));
    add(p + "mlp2.b", uniform({d}, DType::real64, mix_scale, rng));
  }
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(d));
  add("project.w", uniform({1, d}, DType::real64, proj_scale, rng));
  add("project.b", uniform({1}, DType::real64, proj_scale, rng));

  const Shape prefix{d, d, dg};
  ad::SparseMap bank = hermitian_project_map(prefix, k).after(hermitian_extend_map(prefix, k));
  if (cfg_.variant == Variant::radial_fno) bank = radial_tie_map(prefix, k, cfg_.group).after(bank);
  kernel_map_ = std::make_shared<const ad::SparseMap>(group_expand_map(d, d, cfg_.stack_group(), k).after(bank));
  bank_map_ = std::make_shared<const ad::SparseMap>(std::move(bank));
  mix_map_ = std::make_shared<const ad::SparseMap>(gconv1x1_expand_map(d, d, cfg_.stack_group()));
  lift_map_ = std::make_shared<const ad::SparseMap>(replicate_rows_map(d, c_in, dg));
  project_map_ = std::make_shared<const ad::SparseMap>(mean_cols_map(1, d, dg));
}

std::vector<ad::Parameter*> Model::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const ad::Parameter*> Model::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

ad::Parameter& Model::parameter(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw std::out_of_range("model has no parameter '" + name + "'");
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

std::size_t param_count(const Model& m) { return m.param_count(); }

ad::Var Model::use(ad::Tape& tape, ad::Parameter& p, bool track) {
  return track ? tape.param(p) : tape.constant(p.value);
}

ad::Var Model::expand(ad::Tape& tape, ad::Parameter& p, const std::shared_ptr<const ad::SparseMap>& map, bool track) {
  return ad::linear_map(use(tape, p, track), map);
}

ad::Var Model::kernel(ad::Tape& tape, std::size_t l, bool track) {
  return expand(tape, parameter("layer" + std::to_string(l) + ".spectral"), kernel_map_, track);
}

Tensor Model::bank(std::size_t l) const {
  for (const auto& p : params_)
    if (p->name == "layer" + std::to_string(l) + ".spectral") return bank_map_->apply(p->value);
  throw std::out_of_range("model has no layer " + std::to_string(l));
}

ad::Var Model::lift(ad::Tape& tape, ad::Var x, bool track) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4 || xv.shape()[1] != cfg_.in_steps) {
    throw ShapeError("model input must be (B, " + std::to_string(cfg_.in_steps) + ", n, n), got " +
                     gfno::to_string(xv.shape()));
  }
  const std::size_t batch = xv.shape()[0], n = xv.shape()[2];
  if (xv.shape()[3] != n) throw ShapeError("model input must be square, got " + gfno::to_string(xv.shape()));
  if (n < 2 * cfg_.k - 1) {
    throw ShapeError("grid n=" + std::to_string(n) + " is smaller than the kernel band 2k-1=" +
                     std::to_string(2 * cfg_.k - 1) + "; use k <= " + std::to_string((n + 1) / 2));
  }
  ad::Var input = x;
  if (cfg_.pos_channels() > 0) {
    const Tensor pe = pos_encoding(cfg_.pos_enc, n);
    Tensor tiled({batch, cfg_.pos_channels(), n, n});
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(pe.data().data(), pe.numel(), tiled.data().data() + b * pe.numel());
    input = ad::concat_channels({x, tape.constant(std::move(tiled))});
  }
  const ad::Var w = expand(tape, parameter("lift.w"), lift_map_, track);
  return ad::add_channel_bias(ad::contract(input, w), use(tape, parameter("lift.b"), track));
}

ad::Var Model::layer(ad::Tape& tape, std::size_t l, ad::Var h, bool track) {
  const std::string p = "layer" + std::to_string(l) + ".";
  auto mix = [&](ad::Var v, const std::string& name) {
    const ad::Var w = expand(tape, parameter(p + name + "w"), mix_map_, track);
    return ad::add_channel_bias(ad::contract(v, w), use(tape, parameter(p + name + "b"), track));
  };
  const ad::Var spec = ad::spectral_conv(h, kernel(tape, l, track), cfg_.k);
  const ad::Var hidden = ad::gelu(mix(spec, "mlp1."));
  return ad::add(mix(h, ""), mix(hidden, "mlp2."));
}

ad::Var Model::project(ad::Tape& tape, ad::Var h, bool track) {
  const ad::Var w = expand(tape, parameter("project.w"), project_map_, track);
  return ad::add_channel_bias(ad::contract(h, w), use(tape, parameter("project.b"), track));
}

ad::Var Model::forward(ad::Tape& tape, ad::Var x, bool track) {
  ad::Var h = lift(tape, x, track);
  for (std::size_t l = 0; l < cfg_.layers; ++l) h = layer(tape, l, h, track);
  return project(tape, h, track);
}

Tensor Model::predict(const Tensor& x) {
  const bool single = x.rank() == 3;
  ad::Tape tape;
  const ad::Var in = tape.constant(single ? x.reshaped({1, x.shape()[0], x.shape()[1], x.shape()[2]}) : x);
  Tensor out = forward(tape, in, false).value();
  if (single) return std::move(out).reshaped({1, out.shape()[2], out.shape()[3]});
  return out;
}

}  // namespace gfno::model
