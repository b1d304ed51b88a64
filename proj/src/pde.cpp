#include "gfno/pde.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gfno/spectral.hpp"

namespace gfno::pde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAlpha = 2.5;
constexpr double kTau = 7.0;

void require_square_field(const Tensor& w, const char* what) {
  require_real(w, what);
  if (w.rank() != 2 || w.shape()[0] != w.shape()[1]) {
    throw ShapeError(std::string(what) + ": expected a square (n, n) field, got " + gfno::to_string(w.shape()));
  }
}

Tensor rfft(const Tensor& x) { return spectral::rdft2(x); }
Tensor irfft(const Tensor& x, std::size_t n) { return spectral::irdft2(x, n); }

}  // namespace

Forcing parse_forcing(const std::string& s) {
  if (s == "sym") return Forcing::sym;
  if (s == "nonsym") return Forcing::nonsym;
  if (s == "none") return Forcing::none;
  throw std::invalid_argument("unknown forcing '" + s + "' (expected sym, nonsym or none)");
}

std::string to_string(Forcing f) {
  switch (f) {
    case Forcing::none: return "none";
    case Forcing::nonsym: return "nonsym";
    case Forcing::sym: return "sym";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "cn_heun") return Scheme::cn_heun;
  if (s == "cn_euler") return Scheme::cn_euler;
  throw std::invalid_argument("unknown time scheme '" + s + "' (expected cn_heun or cn_euler)");
}

std::string to_string(Scheme s) { return s == Scheme::cn_heun ? "cn_heun" : "cn_euler"; }

std::size_t NSConfig::steps_per_record() const {
  return static_cast<std::size_t>(std::llround(record_dt / dt));
}

void NSConfig::validate() const {
  if (!(dt > 0.0) || !(nu > 0.0) || !(record_dt > 0.0)) {
    throw std::invalid_argument("NSConfig: dt, nu and record_dt must be positive");
  }
  const double ratio = record_dt / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
    throw std::invalid_argument("NSConfig: record_dt=" + std::to_string(record_dt) +
                                " is not an integer multiple of dt=" + std::to_string(dt));
  }
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("NSConfig: n must be even and >= 4");
}

double grf_sigma(double xi1, double xi2) {
  const double k2 = 4.0 * std::numbers::pi * std::numbers::pi * (xi1 * xi1 + xi2 * xi2);
  return std::pow(kTau, kAlpha - 1.0) * std::pow(k2 + kTau * kTau, -kAlpha / 2.0);
}

Tensor grf_sample(std::size_t n, std::uint64_t seed) {
  if (n % 2 != 0 || n < 8) throw std::invalid_argument("grf_sample: n must be even and >= 8, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor spec({n, n}, DType::complex128);
  auto s = spec.cdata();
  const double nn = static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t mi = (n - i) % n, mj = (n - j) % n;
      const std::size_t here = i * n + j, mirror = mi * n + mj;
      if (mirror < here) continue;
      if (mirror == here) continue;  // self-conjugate: origin and Nyquist corners stay zero
      const double sigma = grf_sigma(static_cast<double>(spectral::frequency_of(i, n, spectral::Layout::standard)),
                                     static_cast<double>(spectral::frequency_of(j, n, spectral::Layout::standard)));
      const double a = normal(rng), b = normal(rng);
      const cdouble c = nn * sigma * cdouble(a, b) / std::numbers::sqrt2;
      s[here] = c;
      s[mirror] = std::conj(c);
    }
  return spectral::idft2(spec).real_part();
}

Tensor forcing_field(Forcing kind, std::size_t n) {
  Tensor f({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x1 = static_cast<double>(i) / static_cast<double>(n);
      const double x2 = static_cast<double>(j) / static_cast<double>(n);
      double v = 0.0;
      switch (kind) {
        case Forcing::none: break;
        case Forcing::nonsym: v = 0.1 * (std::sin(kTwoPi * (x1 + x2)) + std::cos(kTwoPi * (x1 + x2))); break;
        case Forcing::sym: v = 0.1 * (std::cos(2.0 * kTwoPi * x1) + std::cos(2.0 * kTwoPi * x2)); break;
      }
      f.data()[i * n + j] = v;
    }
  return f;
}

NsSolver::NsSolver(const NSConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t n = cfg_.n, half = n / 2 + 1;
  k1_.resize(n * half);
  k2_.resize(n * half);
  inv_lap_.resize(n * half);
  cn_a_.resize(n * half);
  dealias_.resize(n * half);
  const long ln = static_cast<long>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < half; ++j) {
      const long x1 = spectral::frequency_of(i, n, spectral::Layout::standard);
      const long x2 = static_cast<long>(j);
      const std::size_t e = i * half + j;
      k1_[e] = 2 * std::abs(x1) == ln ? 0.0 : kTwoPi * static_cast<double>(x1);
      k2_[e] = 2 * x2 == ln ? 0.0 : kTwoPi * static_cast<double>(x2);
      const double kappa2 = kTwoPi * kTwoPi * static_cast<double>(x1 * x1 + x2 * x2);
      inv_lap_[e] = e == 0 ? 0.0 : 1.0 / kappa2;
      cn_a_[e] = 0.5 * cfg_.dt * cfg_.nu * kappa2;
      dealias_[e] = (e != 0 && 3 * std::abs(x1) <= ln && 3 * x2 <= ln) ? 1.0 : 0.0;
    }
  f_hat_ = rfft(forcing_field(cfg_.forcing, n));
  f_hat_.cdata()[0] = 0.0;
}

Tensor NsSolver::nonlinear_hat(const Tensor& w_hat) const {
  const std::size_t n = cfg_.n, m = w_hat.numel();
  const auto w = w_hat.cdata();
  // u1, u2, dw/dx1, dw/dx2 stacked for one batched inverse transform.
  Tensor fields({4, n, n / 2 + 1}, DType::complex128);
  auto f = fields.cdata();
  for (std::size_t e = 0; e < m; ++e) {
    const cdouble we = dealias_[e] * w[e];
    const cdouble iw(-we.imag(), we.real());
    f[e] = (k2_[e] * inv_lap_[e]) * iw;
    f[m + e] = (-k1_[e] * inv_lap_[e]) * iw;
    f[2 * m + e] = k1_[e] * iw;
    f[3 * m + e] = k2_[e] * iw;
  }
  const Tensor phys = irfft(fields, n);
  const double* p = phys.data().data();
  const std::size_t nn = n * n;
  Tensor prod({n, n});
  double* q = prod.data().data();
  for (std::size_t e = 0; e < nn; ++e) q[e] = p[e] * p[2 * nn + e] + p[nn + e] * p[3 * nn + e];
  Tensor out = rfft(prod);
  auto o = out.cdata();
  for (std::size_t e = 0; e < o.size(); ++e) o[e] *= dealias_[e];
  return out;
}

Tensor NsSolver::advance(const Tensor& w_hat, const Tensor& explicit_hat) const {
  Tensor out(w_hat.shape(), DType::complex128);
  auto o = out.cdata();
  auto w = w_hat.cdata();
  auto x = explicit_hat.cdata();
  for (std::size_t e = 0; e < o.size(); ++e) o[e] = (w[e] * (1.0 - cn_a_[e]) + cfg_.dt * x[e]) / (1.0 + cn_a_[e]);
  return out;
}

namespace {

Tensor explicit_term(const Tensor& n_hat, const Tensor& f_hat) { return f_hat - n_hat; }

}  // namespace

Tensor NsSolver::step(const Tensor& w, std::size_t step_index) const {
  require_square_field(w, "ns_step");
  if (w.shape()[0] != cfg_.n) {
    throw ShapeError("ns_step: field " + gfno::to_string(w.shape()) + " does not match solver n=" + std::to_string(cfg_.n));
  }
  const Tensor w_hat = rfft(w);
  const Tensor e0 = explicit_term(nonlinear_hat(w_hat), f_hat_);
  Tensor next = advance(w_hat, e0);
  if (cfg_.scheme == Scheme::cn_heun) {
    const Tensor e1 = explicit_term(nonlinear_hat(next), f_hat_);
    next = advance(w_hat, 0.5 * (e0 + e1));
  }
  Tensor out = irfft(next, cfg_.n);
  if (!all_finite(out)) throw BlowUpError(step_index, Tensor());
  return out;
}

Tensor NsSolver::integrate(const Tensor& w0) const {
  require_square_field(w0, "ns_solve");
  const std::size_t n = cfg_.n, per = cfg_.steps_per_record();
  Tensor frames({cfg_.T + 1, n, n});
  std::copy_n(w0.data().data(), n * n, frames.data().data());
  Tensor w_hat = rfft(w0);
  std::size_t step = 0;
  for (std::size_t r = 1; r <= cfg_.T; ++r) {
    for (std::size_t s = 0; s < per; ++s, ++step) {
      const Tensor e0 = explicit_term(nonlinear_hat(w_hat), f_hat_);
      Tensor next = advance(w_hat, e0);
      if (cfg_.scheme == Scheme::cn_heun) {
        const Tensor e1 = explicit_term(nonlinear_hat(next), f_hat_);
        next = advance(w_hat, 0.5 * (e0 + e1));
      }
      w_hat = std::move(next);
      if (!all_finite(w_hat)) {
        Tensor prefix({r, n, n});
        std::copy_n(frames.data().data(), r * n * n, prefix.data().data());
        throw BlowUpError(step + 1, std::move(prefix));
      }
    }
    const Tensor w = irfft(w_hat, n);
    std::copy_n(w.data().data(), n * n, frames.data().data() + r * n * n);
  }
  return frames;
}

Tensor ns_step(const Tensor& w, const NSConfig& cfg) { return NsSolver(cfg).step(w); }

Trajectory ns_solve(const NSConfig& cfg) {
  NsSolver solver(cfg);
  return {solver.integrate(grf_sample(cfg.n, cfg.seed)), cfg};
}

Tensor velocity(const Tensor& w) {
  require_square_field(w, "velocity");
  const std::size_t n = w.shape()[0];
  const Tensor w_hat = rfft(w);
  Tensor u1(w_hat.shape(), DType::complex128), u2 = u1;
  const std::size_t half = n / 2 + 1;
  const long ln = static_cast<long>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < half; ++j) {
      const long x1 = spectral::frequency_of(i, n, spectral::Layout::standard), x2 = static_cast<long>(j);
      const std::size_t e = i * half + j;
      if (e == 0) continue;
      const double k1 = 2 * std::abs(x1) == ln ? 0.0 : kTwoPi * static_cast<double>(x1);
      const double k2 = 2 * x2 == ln ? 0.0 : kTwoPi * static_cast<double>(x2);
      const cdouble psi = w_hat.cdata()[e] / (kTwoPi * kTwoPi * static_cast<double>(x1 * x1 + x2 * x2));
      u1.cdata()[e] = cdouble(0.0, k2) * psi;
      u2.cdata()[e] = cdouble(0.0, -k1) * psi;
    }
  Tensor out({2, n, n});
  const Tensor a = irfft(u1, n), b = irfft(u2, n);
  std::copy_n(a.data().data(), n * n, out.data().data());
  std::copy_n(b.data().data(), n * n, out.data().data() + n * n);
  return out;
}

Tensor divergence(const Tensor& u) {
  if (u.rank() != 3 || u.shape()[0] != 2) throw ShapeError("divergence: expected (2, n, n), got " + gfno::to_string(u.shape()));
  const std::size_t n = u.shape()[1], half = n / 2 + 1;
  const Tensor h = rfft(u);
  Tensor d({n, half}, DType::complex128);
  const long ln = static_cast<long>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < half; ++j) {
      const long x1 = spectral::frequency_of(i, n, spectral::Layout::standard), x2 = static_cast<long>(j);
      const double k1 = 2 * std::abs(x1) == ln ? 0.0 : kTwoPi * static_cast<double>(x1);
      const double k2 = 2 * x2 == ln ? 0.0 : kTwoPi * static_cast<double>(x2);
      const std::size_t e = i * half + j;
      d.cdata()[e] = cdouble(0.0, k1) * h.cdata()[e] + cdouble(0.0, k2) * h.cdata()[n * half + e];
    }
  return irfft(d, n);
}

double closure_check(const NSConfig& cfg, double t_check, const group::GroupElement& g) {
  const double ratio = t_check / cfg.record_dt;
  if (t_check < 0.0 || std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("closure_check: t_check must be a non-negative multiple of record_dt");
  }
  NSConfig c = cfg;
  c.T = static_cast<std::size_t>(std::llround(ratio));
  const NsSolver solver(c);
  const Tensor w0 = grf_sample(c.n, c.seed);
  const Tensor a = solver.integrate(w0);
  const Tensor b = solver.integrate(group::act_plane(g, w0));
  const std::size_t n = c.n;
  Tensor wa({n, n}), wb({n, n});
  std::copy_n(a.data().data() + c.T * n * n, n * n, wa.data().data());
  std::copy_n(b.data().data() + c.T * n * n, n * n, wb.data().data());
  return l2_norm(group::act_plane(g, wa) - wb) / l2_norm(wa);
}

}  // namespace gfno::pde
