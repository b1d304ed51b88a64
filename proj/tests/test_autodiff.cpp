#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "gfno/autodiff.hpp"
#include "gfno/operator.hpp"
#include "gfno/spectral.hpp"
#include "support.hpp"

using namespace gfno;
using namespace gfno::ad;
using gfno::test::Gen;
using gfno::test::for_all;

namespace {

Var dot(Tape& t, Var v, const Tensor& r) { return sum(mul(v, t.constant(r))); }

/// <L x, y> against <x, L^T y> for the linear map x -> build(tape, x).
double adjoint_gap(const Tensor& x, const Tensor& y, const std::function<Var(Tape&, Var)>& build) {
  Parameter p("x", x);
  p.zero_grad();
  Tape t;
  const Var out = build(t, t.param(p));
  const double lhs = inner_product(out.value(), y);
  t.backward(out, y);
  const double rhs = inner_product(x, p.grad);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

}  // namespace

TEST(Backward, SumGivesOnes) {
  Gen g(1);
  Parameter p("p", g.real({3, 4}));
  p.zero_grad();
  Tape t;
  t.backward(sum(t.param(p)));
  for (double v : p.grad.raw()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, HalfSquareGivesValue) {
  Gen g(2);
  Parameter p("p", g.real({5}));
  p.zero_grad();
  Tape t;
  const Var v = t.param(p);
  t.backward(scale(sum(mul(v, v)), 0.5));
  EXPECT_LT(max_abs_diff(p.grad, p.value), 1e-15);
}

TEST(Backward, ParameterUsedTwiceAccumulates) {
  Parameter p("p", Tensor::real({2}, {1.0, -2.0}));
  p.zero_grad();
  Tape t;
  t.backward(sum(add(t.param(p), scale(t.param(p), 3.0))));
  EXPECT_EQ(p.grad.data()[0], 4.0);
  EXPECT_EQ(p.grad.data()[1], 4.0);
}

TEST(Backward, NonScalarLossRejected) {
  Parameter p("p", Tensor({2}));
  Tape t;
  EXPECT_THROW(t.backward(t.param(p)), ShapeError);
}

TEST(Backward, SecondCallRejected) {
  Parameter p("p", Tensor({2}));
  Tape t;
  const Var l = sum(t.param(p));
  t.backward(l);
  EXPECT_THROW(t.backward(l), std::logic_error);
  t.reset();
  EXPECT_NO_THROW(t.backward(sum(t.param(p))));
}

TEST(Backward, NonFiniteNamesOp) {
  Parameter p("p", Tensor::real({1}, {1e300}));
  Tape t;
  const Var v = t.param(p);
  try {
    mul(v, v);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.op(), "mul");
  }
}

TEST(GradCheck, IdentityContractIsExact) {
  Gen g(3);
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.data()[i * 3 + i] = 1.0;
  Parameter x("x", g.real({2, 3, 4}));
  const auto res = grad_check([&](Tape& t) { return sum(contract(t.param(x), t.constant(eye))); }, {&x});
  EXPECT_LT(res.max_error, 1e-10);
}

TEST(GradCheck, GeluSum) {
  Gen g(4);
  Parameter x("x", g.real({4, 5}));
  for (double& v : x.value.raw()) v *= 3.0;
  const auto res = grad_check([&](Tape& t) { return sum(gelu(t.param(x))); }, {&x});
  EXPECT_LT(res.max_error, 1e-6);
}

TEST(GradCheck, ComplexKernelTreatsPartsIndependently) {
  Gen g(5);
  const std::size_t k = 2, modes = (2 * k - 1) * k;
  Parameter x("x", g.real({1, 2, 5, 5})), kern("kernel", g.complex({modes, 2, 2}));
  const Tensor r = g.real({1, 2, 5, 5});
  const auto res = grad_check([&](Tape& t) { return dot(t, spectral_conv(t.param(x), t.param(kern), k), r); },
                              {&x, &kern});
  EXPECT_LT(res.max_error, 1e-6);
}

TEST(GradCheck, FourierLayerOnFourByFour) {
  model::ModelConfig c;
  c.group = group::Group::p4;
  c.d_z = 2;
  c.k = 2;
  c.layers = 1;
  c.in_steps = 1;
  model::Model m(c, 9);
  Gen g(6);
  const Tensor x = g.real({2, 1, 4, 4});
  std::vector<Parameter*> ps;
  for (auto* p : m.parameters())
    if (p->name.rfind("layer0", 0) == 0) ps.push_back(p);
  ASSERT_FALSE(ps.empty());
  Tensor r;
  {
    Tape t;
    r = g.real(m.layer(t, 0, m.lift(t, t.constant(x), false), true).shape());
  }
  const auto res = grad_check(
      [&](Tape& t) { return dot(t, m.layer(t, 0, m.lift(t, t.constant(x), false), true), r); }, ps);
  EXPECT_LT(res.max_error, 1e-4) << res.worst_param << "[" << res.worst_index << "]";
}

TEST(AdjointProperty, Contract) {
  for_all(10, 20, [](Gen& g) {
    const std::size_t b = g.size(1, 3), ci = g.size(1, 4), co = g.size(1, 4);
    const Tensor w = g.real({co, ci});
    EXPECT_LT(adjoint_gap(g.real({b, ci, 3, 3}), g.real({b, co, 3, 3}),
                          [&](Tape& t, Var x) { return contract(x, t.constant(w)); }),
              1e-10);
    const Tensor x = g.real({b, ci, 3, 3});
    EXPECT_LT(adjoint_gap(w, g.real({b, co, 3, 3}), [&](Tape& t, Var v) { return contract(t.constant(x), v); }),
              1e-10);
  });
}

TEST(AdjointProperty, SpectralConvInInputAndKernel) {
  for_all(10, 21, [](Gen& g) {
    const std::size_t k = g.size(1, 3), n = 2 * k - 1 + g.size(0, 3), ci = g.size(1, 3), co = g.size(1, 3);
    const std::size_t modes = (2 * k - 1) * k;
    const Tensor kern = g.complex({modes, co, ci}), x = g.real({2, ci, n, n});
    const Tensor y = g.real({2, co, n, n});
    EXPECT_LT(adjoint_gap(x, y, [&](Tape& t, Var v) { return spectral_conv(v, t.constant(kern), k); }), 1e-10);
    EXPECT_LT(adjoint_gap(kern, y, [&](Tape& t, Var v) { return spectral_conv(t.constant(x), v, k); }), 1e-10);
  });
}

TEST(AdjointProperty, BandTransforms) {
  for_all(10, 22, [](Gen& g) {
    const std::size_t k = g.size(1, 4), nx = 2 * k - 1 + g.size(0, 4), ny = 2 * k - 1 + g.size(0, 4);
    const Tensor x = g.real({2, nx, ny}), band = g.complex({2, 2 * k - 1, k}), fy = g.real({2, nx, ny});
    const double l1 = inner_product(spectral::band_rdft(x, k), band);
    const double r1 = inner_product(x, spectral::band_rdft_adjoint(band, nx, ny));
    EXPECT_NEAR(l1, r1, 1e-10 * std::max(1.0, std::abs(l1)));
    const double l2 = inner_product(spectral::band_irdft(band, nx, ny), fy);
    const double r2 = inner_product(band, spectral::band_irdft_adjoint(fy, k));
    EXPECT_NEAR(l2, r2, 1e-10 * std::max(1.0, std::abs(l2)));
  });
}

TEST(AdjointProperty, SparseMaps) {
  for_all(6, 23, [](Gen& g) {
    const std::size_t k = g.size(1, 3);
    const auto grp = g.size(0, 1) ? group::Group::p4m : group::Group::p4;
    const std::size_t dg = group::order(grp);
    auto map = std::make_shared<const SparseMap>(
        model::group_expand_map(2, 1, grp, k)
            .after(model::hermitian_project_map({2, 1, dg}, k))
            .after(model::hermitian_extend_map({2, 1, dg}, k)));
    const Tensor x = g.complex(map->in_shape), y = g.complex(map->out_shape);
    EXPECT_LT(adjoint_gap(x, y, [&](Tape&, Var v) { return linear_map(v, map); }), 1e-10);
    EXPECT_NEAR(inner_product(map->apply(x), y), inner_product(x, map->adjoint(y)), 1e-10);
  });
}

TEST(AdjointProperty, ChannelPlumbing) {
  Gen g(24);
  const Tensor a = g.real({2, 5, 3}), y = g.real({2, 2, 3});
  EXPECT_LT(adjoint_gap(a, y, [](Tape&, Var v) { return slice_channels(v, 1, 2); }), 1e-12);
  const Tensor b = g.real({2, 4, 3}), yb = g.real({2, 4, 3});
  EXPECT_LT(adjoint_gap(b, yb, [](Tape&, Var v) { return scale(v, -2.5); }), 1e-12);
  const Tensor bias = g.real({2}), yc = g.real({1, 4, 3});
  EXPECT_LT(adjoint_gap(bias, yc, [&](Tape& t, Var v) { return add_channel_bias(t.constant(Tensor({1, 4, 3})), v); }),
            1e-12);
}

TEST(SparseMap, CompositionAppliesInnerFirst) {
  Gen g(25);
  const std::size_t k = 3;
  const auto ext = model::hermitian_extend_map({1, 1, 4}, k);
  const auto proj = model::hermitian_project_map({1, 1, 4}, k);
  const Tensor x = g.complex(ext.in_shape);
  EXPECT_LT(max_abs_diff(proj.after(ext).apply(x), proj.apply(ext.apply(x))), 1e-14);
}
