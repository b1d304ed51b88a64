#include "gfno/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "gfno/autodiff.hpp"
#include "gfno/pde.hpp"
#include "gfno/reference.hpp"
#include "gfno/spectral.hpp"

namespace gfno::checks {

namespace {

using clk = std::chrono::steady_clock;
using group::Group;

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

template <class F>
CheckResult timed(const std::string& name, F&& body) {
  const auto t0 = clk::now();
  CheckResult r = body();
  r.name = name;
  r.seconds = seconds_since(t0);
  return r;
}

/// Short solver trajectories used as model inputs, (count, len, n, n).
Tensor small_trajectories(std::size_t count, std::size_t n, std::size_t len, std::uint64_t seed) {
  pde::NSConfig c;
  c.n = n;
  c.nu = 1e-3;
  c.dt = 1e-2;
  c.T = len - 1;
  c.forcing = pde::Forcing::sym;
  return pde::generate_dataset(c, count, seed).data;
}

double max_abs_complex_diff(const Tensor& a, const Tensor& b) {
  return max_abs(a.as_complex() - b.as_complex());
}

}  // namespace

Tensor random_tensor(const Shape& shape, std::uint64_t seed, DType dtype) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(shape, dtype);
  for (double& v : t.raw()) v = u(rng);
  return t;
}

Tensor bandlimited_field(const Shape& shape, std::size_t max_mode, std::uint64_t seed) {
  const std::size_t nx = shape[shape.size() - 2], ny = shape[shape.size() - 1];
  Tensor spec = spectral::rdft2(random_tensor(shape, seed));
  auto d = spec.cdata();
  const std::size_t half = ny / 2 + 1, slices = d.size() / (nx * half);
  const long lim = static_cast<long>(max_mode);
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < half; ++j) {
        const long xi = spectral::frequency_of(i, nx, spectral::Layout::standard);
        if (std::abs(xi) > lim || static_cast<long>(j) > lim) d[(s * nx + i) * half + j] = 0.0;
      }
  return spectral::irdft2(spec, ny);
}

CheckResult dft_equivariance(std::size_t fields, std::uint64_t seed) {
  return timed("dft_equivariance", [&] {
    double worst = 0.0;
    for (std::size_t n : {16u, 15u}) {
      const long ln = static_cast<long>(n);
      for (std::size_t f = 0; f < fields; ++f) {
        const Tensor x = random_tensor({n, n}, seed + 1000 * n + f);
        const Tensor X = spectral::dft2(x);
        for (const auto& s : group::elements(Group::p4m)) {
          const Tensor lhs = spectral::dft2(group::act_plane(group::origin_fixing(s, n), x));
          const group::Mat2 minv = group::stab_inverse(s).matrix();
          Tensor rhs({n, n}, DType::complex128);
          for (long a = 0; a < ln; ++a)
            for (long b = 0; b < ln; ++b) {
              const auto src = minv.apply(a, b);
              const long i = ((src[0] % ln) + ln) % ln, j = ((src[1] % ln) + ln) % ln;
              rhs.cdata()[static_cast<std::size_t>(a * ln + b)] = X.cdata()[static_cast<std::size_t>(i * ln + j)];
            }
          worst = std::max(worst, max_abs(lhs - rhs));
        }
      }
    }
    CheckResult r;
    r.value = worst;
    r.bound = 1e-10;
    r.passed = worst < r.bound;
    r.detail = std::to_string(fields) + " fields on 16x16 and 15x15, all 8 elements of p4m";
    return r;
  });
}

CheckResult freq_vs_spatial(std::uint64_t seed) {
  return timed("freq_vs_spatial", [&] {
    double worst = 0.0;
    std::uint64_t s = seed;
    for (std::size_t n : {5u, 7u})
      for (std::size_t d : {1u, 2u})
        for (Group g : {Group::p4, Group::p4m}) {
          const std::size_t dg = group::order(g);
          const Tensor f = random_tensor({d, dg, n, n}, ++s);
          const Tensor bank = random_tensor({d, d, dg, n, n}, ++s, DType::complex128);
          const Tensor fast = model::gconv_freq_complex(f, bank, g);
          const Tensor slow = reference::spatial_gconv(f, bank, g);
          worst = std::max(worst, max_abs_complex_diff(fast, slow));
        }
    CheckResult r;
    r.value = worst;
    r.bound = 1e-8;
    r.passed = worst < r.bound;
    r.detail = "n in {5,7}, d_z in {1,2}, p4 and p4m, full band";
    return r;
  });
}

double model_equivariance_error(model::Model& m, const Tensor& x) {
  const Tensor y = m.predict(x);
  const Group g = m.config().group == Group::none ? Group::p4m : m.config().group;
  double worst = 0.0;
  for (const auto& s : group::elements(g)) {
    const auto e = group::GroupElement::rotation(s);
    worst = std::max(worst, max_abs(m.predict(group::act_plane(e, x)) - group::act_plane(e, y)));
  }
  return worst;
}

double rotation_consistency(model::Model& m, const Tensor& trajs, std::size_t in_steps) {
  const auto p = harness::model_predictor(m);
  const double base = harness::rollout_eval(p, trajs, in_steps);
  const double rot = harness::rotation_test(p, trajs, in_steps);
  return std::abs(rot - base) / base;
}

CheckResult random_model_equivariance(std::uint64_t seed) {
  return timed("random_model_equivariance", [&] {
    const Tensor trajs = small_trajectories(2, 16, 13, seed + 7);
    double eq = 0.0, rel = 0.0;
    for (Group g : {Group::p4, Group::p4m}) {
      model::ModelConfig c;
      c.group = g;
      c.d_z = 4;
      c.k = 5;
      c.layers = 4;
      c.in_steps = 10;
      model::Model m(c, seed + static_cast<std::uint64_t>(g));
      const Tensor x = random_tensor({2, 10, 16, 16}, seed + 11);
      eq = std::max(eq, model_equivariance_error(m, x));
      rel = std::max(rel, rotation_consistency(m, trajs, 10));
    }
    CheckResult r;
    r.value = eq;
    r.bound = 1e-8;
    r.passed = eq < r.bound && rel < 1e-5;
    char buf[128];
    std::snprintf(buf, sizeof buf, "p4 and p4m at init; rotation_test vs rollout_eval rel %.3e (bound 1e-5)", rel);
    r.detail = buf;
    return r;
  });
}

CheckResult trained_model_equivariance(model::Model& m, const Tensor& trajs, std::uint64_t seed) {
  return timed("trained_model_equivariance", [&] {
    const std::size_t t_in = m.config().in_steps, n = trajs.shape()[2];
    const Tensor x = random_tensor({2, t_in, n, n}, seed);
    const double eq = model_equivariance_error(m, x);
    const double rel = rotation_consistency(m, trajs, t_in);
    CheckResult r;
    r.value = eq;
    r.bound = 1e-8;
    r.passed = eq < r.bound && rel < 1e-5;
    char buf[128];
    std::snprintf(buf, sizeof buf, "rotation_test vs rollout_eval rel %.3e (bound 1e-5)", rel);
    r.detail = buf;
    return r;
  });
}

CheckResult gradient_suite(std::uint64_t seed) {
  return timed("gradient_suite", [&] {
    using namespace ad;
    std::uint64_t s = seed;
    std::string worst_case, worst_elem_case;
    double worst = 0.0, worst_elem = 0.0;
    std::size_t checked = 0;
    auto run = [&](const std::string& label, const std::function<Var(Tape&)>& f, const std::vector<Parameter*>& ps) {
      const GradCheckResult g = grad_check(f, ps, 1e-5);
      checked += g.checked;
      if (g.max_error >= worst) {
        worst = g.max_error;
        worst_case = label + ":" + g.worst_param + "[" + std::to_string(g.worst_index) + "]";
      }
      if (g.max_tensor_error >= worst_elem) {
        worst_elem = g.max_tensor_error;
        worst_elem_case = label + ":" + g.worst_tensor;
      }
    };
    auto project = [](Tape& t, Var v, const Tensor& r) { return sum(mul(v, t.constant(r))); };

    Parameter a("a", random_tensor({2, 3, 4}, ++s)), b("b", random_tensor({2, 3, 4}, ++s));
    const Tensor r24 = random_tensor({2, 3, 4}, ++s);
    run("add", [&](Tape& t) { return project(t, add(t.param(a), t.param(b)), r24); }, {&a, &b});
    run("sub", [&](Tape& t) { return project(t, sub(t.param(a), t.param(b)), r24); }, {&a, &b});
    run("mul", [&](Tape& t) { return project(t, mul(t.param(a), t.param(b)), r24); }, {&a, &b});
    run("scale", [&](Tape& t) { return project(t, scale(t.param(a), -1.7), r24); }, {&a});
    run("gelu", [&](Tape& t) { return project(t, gelu(scale(t.param(a), 2.0)), r24); }, {&a});
    run("sum", [&](Tape& t) { return sum(t.param(a)); }, {&a});

    Parameter x("x", random_tensor({2, 3, 4, 4}, ++s)), w("w", random_tensor({5, 3}, ++s));
    const Tensor r5 = random_tensor({2, 5, 4, 4}, ++s);
    run("contract", [&](Tape& t) { return project(t, contract(t.param(x), t.param(w)), r5); }, {&x, &w});

    Parameter xb("x", random_tensor({2, 6, 3, 3}, ++s)), bias("bias", random_tensor({3}, ++s));
    const Tensor r6 = random_tensor({2, 6, 3, 3}, ++s);
    run("add_channel_bias", [&](Tape& t) { return project(t, add_channel_bias(t.param(xb), t.param(bias)), r6); },
        {&xb, &bias});

    auto mix = std::make_shared<const SparseMap>(model::gconv1x1_expand_map(2, 2, Group::p4m));
    Parameter wm("w", random_tensor({2, 2, 8}, ++s));
    const Tensor r16 = random_tensor({16, 16}, ++s);
    run("linear_map", [&](Tape& t) { return project(t, linear_map(t.param(wm), mix), r16); }, {&wm});

    const std::size_t k = 3, modes = (2 * k - 1) * k;
    Parameter xs("x", random_tensor({2, 3, 8, 8}, ++s)), ks("kernel", random_tensor({modes, 2, 3}, ++s, DType::complex128));
    const Tensor r8 = random_tensor({2, 2, 8, 8}, ++s);
    run("spectral_conv", [&](Tape& t) { return project(t, spectral_conv(t.param(xs), t.param(ks), k), r8); },
        {&xs, &ks});

    // Complex-valued sparse maps feeding the spectral kernel.
    auto bank = std::make_shared<const SparseMap>(
        model::group_expand_map(1, 1, Group::p4, k)
            .after(model::hermitian_project_map({1, 1, 4}, k))
            .after(model::hermitian_extend_map({1, 1, 4}, k)));
    Parameter raw("raw", random_tensor({1, 1, 4, 2 * k - 1, k}, ++s, DType::complex128));
    Parameter xg("x", random_tensor({1, 4, 8, 8}, ++s));
    const Tensor r4 = random_tensor({1, 4, 8, 8}, ++s);
    run("linear_map_complex",
        [&](Tape& t) { return project(t, spectral_conv(t.param(xg), linear_map(t.param(raw), bank), k), r4); },
        {&raw, &xg});

    Parameter c1("c1", random_tensor({2, 2, 3}, ++s)), c2("c2", random_tensor({2, 3, 3}, ++s));
    const Tensor r3 = random_tensor({2, 3, 3}, ++s);
    run("concat_slice",
        [&](Tape& t) { return project(t, slice_channels(concat_channels({t.param(c1), t.param(c2)}), 1, 3), r3); },
        {&c1, &c2});

    const Tensor target = random_tensor({3, 2, 4}, ++s);
    Parameter pr("pred", random_tensor({3, 2, 4}, ++s));
    run("rel_l2_loss", [&](Tape& t) { return rel_l2_loss(t.param(pr), target); }, {&pr});

    // Full one-step loss on an 8x8 grid for every model variant.
    struct Variant {
      model::Variant v;
      Group g;
      model::PosEnc p;
    };
    for (const auto& var : {Variant{model::Variant::gfno, Group::p4, model::PosEnc::symmetric},
                            Variant{model::Variant::gfno, Group::p4m, model::PosEnc::symmetric},
                            Variant{model::Variant::fno, Group::none, model::PosEnc::cartesian},
                            Variant{model::Variant::radial_fno, Group::p4, model::PosEnc::symmetric}}) {
      model::ModelConfig c;
      c.variant = var.v;
      c.group = var.g;
      c.pos_enc = var.p;
      c.d_z = 2;
      c.k = 3;
      c.layers = 2;
      c.in_steps = 2;
      model::Model m(c, ++s);
      const Tensor in = random_tensor({2, 2, 8, 8}, ++s);
      const Tensor tgt = random_tensor({2, 1, 8, 8}, ++s);
      run("model/" + model::to_string(var.v) + "-" + group::to_string(var.g),
          [&](Tape& t) { return rel_l2_loss(m.forward(t, t.constant(in)), tgt); }, m.parameters());
    }

    CheckResult r;
    r.value = worst;
    r.bound = 1e-4;
    r.passed = worst < r.bound;
    char buf[96];
    std::snprintf(buf, sizeof buf, "; per-tensor norm error %.2e at ", worst_elem);
    r.detail = std::to_string(checked) + " scalars, eps 1e-5; worst at " + worst_case + buf + worst_elem_case;
    return r;
  });
}

CheckResult solver_single_mode() {
  return timed("solver_single_mode", [] {
    pde::NSConfig c;
    c.n = 32;
    c.nu = 1e-2;
    c.dt = 1e-3;
    c.forcing = pde::Forcing::none;
    const pde::NsSolver solver(c);
    const std::size_t n = c.n, steps = 200;
    Tensor w({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        w.data()[i * n + j] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    const Tensor w0 = w;
    for (std::size_t s = 0; s < steps; ++s) w = solver.step(w, s);
    const double a = 0.5 * c.dt * c.nu * 4.0 * std::numbers::pi * std::numbers::pi;
    const double factor = std::pow((1.0 - a) / (1.0 + a), static_cast<double>(steps));
    const double err = max_abs(w - factor * w0);
    const double exact = std::exp(-4.0 * std::numbers::pi * std::numbers::pi * c.nu * c.dt * steps);
    CheckResult r;
    r.value = err;
    r.bound = 1e-8;
    r.passed = err < r.bound;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu CN steps of sin(2 pi x1); vs exact exponential %.2e", steps,
                  std::abs(factor - exact));
    r.detail = buf;
    return r;
  });
}

CheckResult solver_richardson() {
  return timed("solver_richardson", [] {
    pde::NSConfig c;
    c.n = 32;
    c.nu = 1e-3;
    c.T = 1;
    c.forcing = pde::Forcing::sym;
    c.seed = 3;
    auto final_frame = [&](double dt) {
      pde::NSConfig d = c;
      d.dt = dt;
      const Tensor f = pde::ns_solve(d).frames;
      Tensor out({c.n, c.n});
      std::copy_n(f.data().data() + c.n * c.n, c.n * c.n, out.data().data());
      return out;
    };
    const double dt = 1e-2;
    const Tensor ref = final_frame(dt / 8);
    const double e1 = l2_norm(final_frame(dt) - ref), e2 = l2_norm(final_frame(dt / 2) - ref);
    CheckResult r;
    r.value = e1 / e2;
    r.bound = 4.5;
    r.passed = r.value >= 3.5 && r.value <= 4.5;
    char buf[160];
    std::snprintf(buf, sizeof buf, "ratio must lie in [3.5, 4.5]; errors %.3e, %.3e against dt/8", e1, e2);
    r.detail = buf;
    return r;
  });
}

CheckResult solver_enstrophy() {
  return timed("solver_enstrophy", [] {
    pde::NSConfig c;
    c.n = 32;
    c.nu = 1e-4;
    c.dt = 1e-3;
    c.T = 5;
    c.forcing = pde::Forcing::none;
    c.seed = 5;
    const Tensor f = pde::ns_solve(c).frames;
    const std::size_t plane = c.n * c.n;
    double prev = 0.0, worst = -1.0;
    for (std::size_t t = 0; t <= c.T; ++t) {
      double e = 0.0;
      for (std::size_t p = 0; p < plane; ++p) e += f.data()[t * plane + p] * f.data()[t * plane + p];
      if (t > 0) worst = std::max(worst, (e - prev) / prev);
      prev = e;
    }
    CheckResult r;
    r.value = worst;
    r.bound = 1e-8;
    r.passed = worst <= r.bound;
    r.detail = "largest relative frame-to-frame enstrophy change, zero forcing";
    return r;
  });
}

CheckResult closure(std::size_t n, double t_check, std::uint64_t seed) {
  return timed("closure", [&] {
    pde::NSConfig c;
    c.n = n;
    c.seed = seed;
    c.forcing = pde::Forcing::sym;
    const auto rot = group::origin_fixing({Group::p4, 1, 1}, n);
    const double sym = pde::closure_check(c, t_check, rot);
    c.forcing = pde::Forcing::nonsym;
    const double nonsym = pde::closure_check(c, t_check, rot);
    CheckResult r;
    r.value = sym;
    r.bound = 2e-2;
    r.passed = sym < 2e-2 && nonsym > 1e-1;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sym %.3e (< 2e-2), nonsym %.3e (> 1e-1); n=%zu, t=%.0f", sym, nonsym, n, t_check);
    r.detail = buf;
    return r;
  });
}

CheckResult bandlimited_superres(model::Model& m, std::size_t n, std::uint64_t seed) {
  return timed("bandlimited_superres", [&] {
    const std::size_t t_in = m.config().in_steps;
    const Tensor coarse = bandlimited_field({1, t_in, n, n}, n / 4, seed);
    const Tensor fine = spectral::trig_interpolate(coarse, 2 * n, 2 * n);
    const Tensor yc = m.predict(coarse);
    const Tensor yf = m.predict(fine);
    const Tensor up = spectral::trig_interpolate(yc, 2 * n, 2 * n);
    const double err = max_abs(yf - up) / max_abs(yf);
    CheckResult r;
    r.value = err;
    r.bound = 1e-6;
    r.passed = err < r.bound;
    char buf[160];
    std::snprintf(buf, sizeof buf, "relative max-norm, %zu -> %zu, input modes |xi| <= %zu; sampled-grid gap %.3e", n,
                  2 * n, n / 4, max_abs(harness::downsample(yf, 2) - yc) / max_abs(yc));
    r.detail = buf;
    return r;
  });
}

CheckResult parameter_counts() {
  return timed("parameter_counts", [] {
    struct Row {
      const char* label;
      model::Variant v;
      Group g;
      std::size_t d_z;
      model::PosEnc p;
      double target;
    };
    const Row rows[] = {{"FNO", model::Variant::fno, Group::none, 20, model::PosEnc::cartesian, 0.93e6},
                        {"G-FNO-p4", model::Variant::gfno, Group::p4, 10, model::PosEnc::symmetric, 0.85e6},
                        {"G-FNO-p4m", model::Variant::gfno, Group::p4m, 7, model::PosEnc::symmetric, 0.84e6}};
    double worst = 0.0;
    std::string detail;
    for (const Row& row : rows) {
      model::ModelConfig c;
      c.variant = row.v;
      c.group = row.g;
      c.d_z = row.d_z;
      c.k = 12;
      c.layers = 4;
      c.pos_enc = row.p;
      c.in_steps = 10;
      const std::size_t count = model::Model(c, 0).param_count();
      const double dev = std::abs(static_cast<double>(count) - row.target) / row.target;
      worst = std::max(worst, dev);
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s%s %zu (%+.1f%%)", detail.empty() ? "" : ", ", row.label, count,
                    100.0 * (static_cast<double>(count) - row.target) / row.target);
      detail += buf;
    }
    CheckResult r;
    r.value = worst;
    r.bound = 0.05;
    r.passed = worst <= r.bound;
    r.detail = detail;
    return r;
  });
}

std::vector<CheckResult> run_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(dft_equivariance(50, seed));
  out.push_back(freq_vs_spatial(seed));
  out.push_back(random_model_equivariance(seed));
  out.push_back(gradient_suite(seed));
  out.push_back(solver_single_mode());
  out.push_back(solver_richardson());
  out.push_back(solver_enstrophy());
  out.push_back(closure(64, 5.0, seed));
  out.push_back(parameter_counts());
  return out;
}

std::string format(const CheckResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s %-28s value=%.3e bound=%.1e time=%.2fs  %s", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.value, r.bound, r.seconds, r.detail.c_str());
  return buf;
}

}  // namespace gfno::checks
