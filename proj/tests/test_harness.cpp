#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "gfno/harness.hpp"
#include "gfno/pde.hpp"
#include "gfno/spectral.hpp"
#include "support.hpp"

using namespace gfno;
using namespace gfno::harness;
using group::Group;
using gfno::test::Gen;
using gfno::test::for_all;

namespace {

Tensor frame(const Tensor& trajs, std::size_t i, std::size_t t) {
  const auto& s = trajs.shape();
  const std::size_t plane = s[2] * s[3];
  const double* p = trajs.data().data() + (i * s[1] + t) * plane;
  return Tensor::real({s[2], s[3]}, std::vector<double>(p, p + plane));
}

/// Returns the true next frame by looking the window's last frame up in `sets`.
Predictor oracle(std::vector<Tensor> sets) {
  return [sets = std::move(sets)](const Tensor& w) {
    const auto& s = w.shape();
    const std::size_t plane = s[2] * s[3];
    Tensor out({s[0], 1, s[2], s[3]});
    for (std::size_t b = 0; b < s[0]; ++b) {
      const double* last = w.data().data() + (b * s[1] + s[1] - 1) * plane;
      bool found = false;
      for (const Tensor& set : sets) {
        if (set.shape()[2] != s[2] || found) continue;
        const std::size_t len = set.shape()[1];
        for (std::size_t i = 0; i < set.shape()[0] && !found; ++i)
          for (std::size_t t = 0; t + 1 < len && !found; ++t) {
            const double* f = set.data().data() + (i * len + t) * plane;
            if (std::memcmp(f, last, plane * sizeof(double)) == 0) {
              std::memcpy(out.data().data() + b * plane, f + plane, plane * sizeof(double));
              found = true;
            }
          }
      }
      if (!found) throw std::logic_error("oracle: window not in dataset");
    }
    return out;
  };
}

Predictor zero_model() {
  return [](const Tensor& w) { return Tensor({w.shape()[0], 1, w.shape()[2], w.shape()[3]}); };
}

Predictor persistence() {
  return [](const Tensor& w) {
    const auto& s = w.shape();
    const std::size_t plane = s[2] * s[3];
    Tensor out({s[0], 1, s[2], s[3]});
    for (std::size_t b = 0; b < s[0]; ++b)
      std::memcpy(out.data().data() + b * plane, w.data().data() + (b * s[1] + s[1] - 1) * plane, plane * sizeof(double));
    return out;
  };
}

Tensor small_trajs(std::size_t count, std::size_t n, std::size_t len, std::uint64_t seed, pde::Forcing f = pde::Forcing::sym) {
  pde::NSConfig c;
  c.n = n;
  c.nu = 1e-3;
  c.dt = 1e-2;
  c.T = len - 1;
  c.forcing = f;
  return pde::generate_dataset(c, count, seed).data;
}

}  // namespace

TEST(Downsample, StridedAndMeanpoolExamples) {
  const Tensor x = Tensor::real({4, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  const Tensor s = downsample(x, 2);
  EXPECT_EQ(std::vector<double>(s.data().begin(), s.data().end()), (std::vector<double>{1, 3, 9, 11}));
  const Tensor m = downsample(x, 2, DownsampleMode::meanpool);
  EXPECT_EQ(std::vector<double>(m.data().begin(), m.data().end()), (std::vector<double>{3.5, 5.5, 11.5, 13.5}));
  EXPECT_THROW(downsample(x, 3), ShapeError);
}

TEST(DownsampleProperty, MeanpoolCommutesWithRotationsStridedDoesNot) {
  bool strided_differs = false;
  for_all(10, 1, [&](Gen& g) {
    const std::size_t f = g.size(2, 3), n = f * g.size(1, 4);
    const Tensor x = g.real({2, n, n});
    for (const auto& s : group::elements(Group::p4m)) {
      const auto e = group::GroupElement::rotation(s);
      const Tensor lhs = downsample(group::act_plane(e, x), f, DownsampleMode::meanpool);
      const Tensor rhs = group::act_plane(e, downsample(x, f, DownsampleMode::meanpool));
      ASSERT_LT(max_abs_diff(lhs, rhs), 1e-15);
      strided_differs = strided_differs ||
                        max_abs_diff(downsample(group::act_plane(e, x), f), group::act_plane(e, downsample(x, f))) > 0.0;
    }
  });
  EXPECT_TRUE(strided_differs);
}

TEST(MakePairs, Counts) {
  Gen g(2);
  const Tensor traj = g.real({12, 3, 3});
  const auto tf = make_pairs(traj, Strategy::teacher_forcing, 10);
  ASSERT_EQ(tf.size(), 2u);
  EXPECT_EQ(tf[1].input.shape(), (Shape{10, 3, 3}));
  EXPECT_EQ(max_abs_diff(tf[1].target.reshaped({3, 3}), frame(traj.reshaped({1, 12, 3, 3}), 0, 11)), 0.0);
  EXPECT_EQ(make_pairs(traj, Strategy::markov, 1).size(), 11u);
  const auto rec = make_pairs(traj, Strategy::recurrent, 10);
  ASSERT_EQ(rec.size(), 1u);
  EXPECT_EQ(rec[0].target.shape(), (Shape{2, 3, 3}));
  EXPECT_THROW(make_pairs(traj, Strategy::teacher_forcing, 12), std::invalid_argument);
}

TEST(Augment, NoneIsIdentity) {
  Gen g(3);
  Tensor x = g.real({3, 2, 4, 4}), y = g.real({3, 1, 4, 4});
  const Tensor x0 = x, y0 = y;
  std::mt19937_64 rng(0);
  augment(x, y, Group::none, rng);
  EXPECT_EQ(max_abs_diff(x, x0), 0.0);
  EXPECT_EQ(max_abs_diff(y, y0), 0.0);
}

TEST(Augment, JointTransformKeepsPerfectPredictionsPerfect) {
  Gen g(4);
  Tensor x = g.real({16, 2, 5, 5});
  Tensor y = x;  // a perfect predictor of "same frames"
  Tensor yhat = x;
  std::mt19937_64 rng(1), rng2(1);
  const auto drawn = augment(x, y, Group::p4m, rng);
  Tensor copy = yhat;
  augment(yhat, copy, Group::p4m, rng2);
  EXPECT_EQ(rmse_rel(yhat, y), 0.0);
  for (std::size_t idx : drawn) EXPECT_LT(idx, 8u);
}

TEST(Augment, SamplesMatchDrawnElements) {
  Gen g(5);
  const Tensor x0 = g.real({8, 2, 4, 4}), y0 = g.real({8, 1, 4, 4});
  Tensor x = x0, y = y0;
  std::mt19937_64 rng(9);
  const auto drawn = augment(x, y, Group::p4, rng);
  for (std::size_t b = 0; b < 8; ++b) {
    const auto e = group::GroupElement::rotation(group::StabilizerElement::from_index(Group::p4, drawn[b]));
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_EQ(max_abs_diff(frame(x, b, c), group::act_plane(e, frame(x0, b, c))), 0.0);
    EXPECT_EQ(max_abs_diff(frame(y, b, 0), group::act_plane(e, frame(y0, b, 0))), 0.0);
  }
}

TEST(Augment, UniformOverRotations) {
  std::mt19937_64 rng(11);
  std::vector<std::size_t> hist(4, 0);
  Tensor x({4000, 1, 2, 2}), y({4000, 1, 2, 2});
  for (std::size_t idx : augment(x, y, Group::p4, rng)) ++hist[idx];
  const double expect = 1000.0, sigma = std::sqrt(4000.0 * 0.25 * 0.75);
  for (std::size_t h : hist) EXPECT_LT(std::abs(static_cast<double>(h) - expect), 3.0 * sigma);
}

TEST(RmseRel, Examples) {
  Gen g(6);
  const Tensor y = g.real({3, 4, 4});
  EXPECT_EQ(rmse_rel(y, y), 0.0);
  EXPECT_NEAR(rmse_rel(Tensor(y.shape()), y), 1.0, 1e-15);
  EXPECT_NEAR(rmse_rel(2.0 * y, y), 1.0, 1e-15);
  Tensor z = y;
  for (std::size_t i = 0; i < 16; ++i) z.data()[16 + i] = 0.0;
  EXPECT_THROW(rmse_rel(y, z), std::domain_error);
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(1e-3, 0, 20), 1e-3);
  EXPECT_NEAR(cosine_lr(1e-3, 10, 20), 5e-4, 1e-18);
  EXPECT_NEAR(cosine_lr(1e-3, 20, 20), 0.0, 1e-18);
}

TEST(AdamW, ClosedFormSteps) {
  ad::Parameter p("w", Tensor::real({1}, {0.5}));
  AdamW opt(0.9, 0.999, 1e-8, 1e-4);
  const double lr = 1e-3, g1 = 0.2, g2 = -0.7;
  p.grad.data()[0] = g1;
  opt.step({&p}, lr);
  double w = 0.5;
  w -= lr * 1e-4 * w;
  w -= lr * g1 / (std::abs(g1) + 1e-8);
  EXPECT_NEAR(p.value.data()[0], w, 1e-12);
  p.grad.data()[0] = g2;
  opt.step({&p}, lr);
  const double m = 0.9 * 0.1 * g1 + 0.1 * g2, v = 0.999 * 0.001 * g1 * g1 + 0.001 * g2 * g2;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  w -= lr * 1e-4 * w;
  w -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  EXPECT_NEAR(p.value.data()[0], w, 1e-12);
  EXPECT_EQ(opt.steps(), 2u);
}

TEST(RolloutEval, OracleZeroAndPersistence) {
  const Tensor trajs = small_trajs(3, 16, 14, 20);
  EXPECT_EQ(rollout_eval(oracle({trajs}), trajs, 10), 0.0);
  EXPECT_NEAR(rollout_eval(zero_model(), trajs, 10), 1.0, 1e-15);
  // Independent persistence score: every predicted frame equals frame T_in - 1.
  double ref = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor last = frame(trajs, i, 9);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 10; t < 14; ++t) {
      const Tensor f = frame(trajs, i, t);
      for (std::size_t p = 0; p < f.numel(); ++p) {
        num += (last.data()[p] - f.data()[p]) * (last.data()[p] - f.data()[p]);
        den += f.data()[p] * f.data()[p];
      }
    }
    ref += std::sqrt(num / den) / 3.0;
  }
  EXPECT_NEAR(rollout_eval(persistence(), trajs, 10, 2), ref, 1e-12);
}

TEST(RotationTest, OracleIsZero) {
  const Tensor trajs = small_trajs(2, 16, 12, 21);
  const Tensor rotated = group::act_plane(group::GroupElement::rotation({Group::p4, 1, 1}), trajs);
  EXPECT_EQ(rotation_test(oracle({rotated}), trajs, 10), 0.0);
}

TEST(SuperRes, OracleAndInterpolationOfTruth) {
  const Tensor fine = small_trajs(2, 32, 12, 22);
  const Tensor coarse = downsample(fine, 2);
  EXPECT_EQ(superres_eval(oracle({fine}), fine, 10), 0.0);
  // Coarse truth interpolated back to the fine grid, scored directly.
  double ref = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 10; t < 12; ++t) {
      const Tensor up = spectral::trig_interpolate(frame(coarse, i, t), 32, 32), f = frame(fine, i, t);
      for (std::size_t p = 0; p < f.numel(); ++p) {
        num += (up.data()[p] - f.data()[p]) * (up.data()[p] - f.data()[p]);
        den += f.data()[p] * f.data()[p];
      }
    }
    ref += std::sqrt(num / den) / 2.0;
  }
  EXPECT_NEAR(interp_baseline(oracle({coarse}), fine, 2, 10), ref, 1e-12);
  EXPECT_GT(ref, 0.0);
}

TEST(Train, OverfitLossDecreasesAndIsReproducible) {
  const Tensor trajs = small_trajs(18, 16, 8, 30);
  const Tensor train_set = trajs.reshaped({18, 8, 16, 16});
  std::vector<double> tr(train_set.data().begin(), train_set.data().begin() + 16 * 8 * 256);
  std::vector<double> va(train_set.data().begin() + 16 * 8 * 256, train_set.data().end());
  const Tensor t16 = Tensor::real({16, 8, 16, 16}, tr), v2 = Tensor::real({2, 8, 16, 16}, va);
  model::ModelConfig mc;
  mc.d_z = 4;
  mc.k = 4;
  mc.layers = 2;
  mc.in_steps = 4;
  TrainConfig tc;
  tc.in_steps = 4;
  tc.epochs = 10;
  tc.batch = 8;
  tc.lr0 = 3e-3;
  tc.seed = 5;
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  model::Model a(mc, 1), b(mc, 1);
  const TrainResult ra = train(a, t16, v2, tc);
  const TrainResult rb = train(b, t16, v2, tc);
  omp_set_num_threads(threads);
  ASSERT_EQ(ra.history.size(), 10u);
  for (std::size_t e = 4; e < ra.history.size(); ++e)
    EXPECT_LT(ra.history[e].train_loss, ra.history[e - 1].train_loss) << "epoch " << e;
  EXPECT_LT(ra.history.back().train_loss, ra.history.front().train_loss);
  for (std::size_t e = 0; e < ra.history.size(); ++e) EXPECT_EQ(ra.history[e].train_loss, rb.history[e].train_loss);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t q = 0; q < pa.size(); ++q) EXPECT_EQ(max_abs_diff(pa[q]->value, pb[q]->value), 0.0);
  EXPECT_DOUBLE_EQ(ra.history[ra.best_epoch].valid_rmse, ra.best_valid);
  EXPECT_NEAR(one_step_rmse(model_predictor(a), v2, 4), ra.best_valid, 1e-12);
}

TEST(Train, RecurrentAndMarkovRun) {
  const Tensor trajs = small_trajs(4, 16, 6, 31);
  for (Strategy s : {Strategy::markov, Strategy::recurrent}) {
    model::ModelConfig mc;
    mc.d_z = 2;
    mc.k = 3;
    mc.layers = 1;
    TrainConfig tc;
    tc.strategy = s;
    tc.in_steps = s == Strategy::markov ? 1 : 3;
    mc.in_steps = tc.in_steps;
    tc.epochs = 2;
    tc.batch = 2;
    tc.augment = Group::p4;
    model::Model m(mc, 2);
    const TrainResult r = train(m, trajs, trajs, tc);
    EXPECT_EQ(r.history.size(), 2u);
    EXPECT_TRUE(std::isfinite(r.best_valid));
  }
}

TEST(Train, NanAbortsWithDiagnostics) {
  Tensor trajs = small_trajs(2, 16, 5, 32);
  trajs.data()[7] = std::nan("");
  model::ModelConfig mc;
  mc.d_z = 2;
  mc.k = 3;
  mc.layers = 1;
  mc.in_steps = 2;
  TrainConfig tc;
  tc.in_steps = 2;
  tc.epochs = 1;
  model::Model m(mc, 3);
  try {
    train(m, trajs, trajs, tc);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("step"), std::string::npos) << msg;
  }
}

TEST(Train, WindowMismatchRejected) {
  model::ModelConfig mc;
  mc.in_steps = 3;
  model::Model m(mc, 0);
  TrainConfig tc;
  tc.in_steps = 10;
  EXPECT_THROW(train(m, Tensor({1, 12, 16, 16}), Tensor({1, 12, 16, 16}), tc), std::invalid_argument);
}

TEST(EvalReport, JsonFieldsAndValidation) {
  EvalReport r;
  r.test = 0.05;
  r.test_rot90 = 0.05;
  r.model_id = "ckpt";
  r.dataset_id = "data";
  r.seeds = {1, 2};
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_DOUBLE_EQ(j.at("rmse").at("test").get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(j.at("rmse_percent").at("test").get<double>(), 5.0);
  EXPECT_FALSE(j.at("rmse").contains("superres"));
  EXPECT_EQ(j.at("seeds").size(), 2u);
  EXPECT_EQ(j.at("interp_scheme").get<std::string>(), "trigonometric");
  r.superres = -1.0;
  EXPECT_THROW(to_json(r), std::domain_error);
  r.superres = std::nan("");
  EXPECT_THROW(to_json(r), std::domain_error);
}

TEST(Strategy, Names) {
  EXPECT_EQ(parse_strategy("tf"), Strategy::teacher_forcing);
  EXPECT_EQ(parse_strategy("markov"), Strategy::markov);
  EXPECT_EQ(parse_strategy("recurrent"), Strategy::recurrent);
  EXPECT_THROW(parse_strategy("dagger"), std::invalid_argument);
}
