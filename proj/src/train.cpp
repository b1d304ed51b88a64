#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "gfno/harness.hpp"

namespace gfno::harness {

double cosine_lr(double lr0, double t, double t_total) {
  if (t_total <= 0.0) return lr0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * std::clamp(t, 0.0, t_total) / t_total));
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

void AdamW::step(const std::vector<ad::Parameter*>& params, double lr) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("AdamW: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t q = 0; q < params.size(); ++q) {
    auto w = params[q]->value.raw();
    auto g = params[q]->grad.raw();
    auto& m = m_[q];
    auto& v = v_[q];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * wd_ * w[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

namespace {

struct Window {
  std::size_t traj;
  std::size_t start;
};

/// Gathers windows into (B, in, n, n) inputs and (B, out, n, n) targets.
void gather(const Tensor& trajs, const std::vector<Window>& ws, std::size_t in, std::size_t out, Tensor& x, Tensor& y) {
  const Shape& s = trajs.shape();
  const std::size_t plane = s[2] * s[3], b = ws.size();
  x = Tensor({b, in, s[2], s[3]});
  y = Tensor({b, out, s[2], s[3]});
  for (std::size_t j = 0; j < b; ++j) {
    const double* src = trajs.raw().data() + (ws[j].traj * s[1] + ws[j].start) * plane;
    std::memcpy(x.raw().data() + j * in * plane, src, in * plane * sizeof(double));
    std::memcpy(y.raw().data() + j * out * plane, src + in * plane, out * plane * sizeof(double));
  }
}

ad::Var unroll(model::Model& m, ad::Tape& tape, ad::Var x, std::size_t steps) {
  const std::size_t t_in = x.shape()[1];
  std::vector<ad::Var> preds;
  ad::Var window = x;
  for (std::size_t r = 0; r < steps; ++r) {
    const ad::Var next = m.forward(tape, window);
    preds.push_back(next);
    window = t_in == 1 ? next : ad::concat_channels({ad::slice_channels(window, 1, t_in - 1), next});
  }
  return steps == 1 ? preds[0] : ad::concat_channels(preds);
}

}  // namespace

TrainResult train(model::Model& m, const Tensor& train_trajs, const Tensor& valid_trajs, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  const std::size_t t_in = cfg.strategy == Strategy::markov ? 1 : cfg.in_steps;
  if (m.config().in_steps != t_in) {
    throw std::invalid_argument("train: model expects " + std::to_string(m.config().in_steps) +
                                " input steps but the " + to_string(cfg.strategy) + " strategy uses " +
                                std::to_string(t_in));
  }
  if (train_trajs.rank() != 4 || valid_trajs.rank() != 4) {
    throw ShapeError("train: trajectories must be (N, L, n, n), got " + gfno::to_string(train_trajs.shape()) + " and " +
                     gfno::to_string(valid_trajs.shape()));
  }
  const std::size_t len = train_trajs.shape()[1];
  if (len <= t_in) throw std::invalid_argument("train: trajectories too short for the input window");
  if (cfg.batch == 0 || cfg.epochs == 0) throw std::invalid_argument("train: batch and epochs must be positive");

  const bool recurrent = cfg.strategy == Strategy::recurrent;
  const std::size_t out_steps = recurrent ? len - t_in : 1;
  std::vector<Window> windows;
  for (std::size_t i = 0; i < train_trajs.shape()[0]; ++i) {
    if (recurrent) {
      windows.push_back({i, 0});
    } else {
      for (std::size_t t = 0; t + t_in < len; ++t) windows.push_back({i, t});
    }
  }

  std::mt19937_64 rng(cfg.seed);
  AdamW opt(cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay);
  const auto params = m.parameters();
  const Predictor pred = model_predictor(m);

  TrainResult result;
  result.best_valid = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = epoch;
    st.lr = cosine_lr(cfg.lr0, static_cast<double>(epoch), static_cast<double>(cfg.epochs));
    std::shuffle(windows.begin(), windows.end(), rng);
    double loss_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t b = 0; b < windows.size(); b += cfg.batch, ++step) {
      const std::vector<Window> chunk(windows.begin() + static_cast<std::ptrdiff_t>(b),
                                      windows.begin() + static_cast<std::ptrdiff_t>(std::min(b + cfg.batch, windows.size())));
      Tensor x, y;
      gather(train_trajs, chunk, t_in, out_steps, x, y);
      augment(x, y, cfg.augment, rng);
      for (auto* p : params) p->zero_grad();
      double loss = 0.0;
      try {
        ad::Tape tape;
        const ad::Var out = unroll(m, tape, tape.constant(std::move(x)), out_steps);
        const ad::Var l = ad::rel_l2_loss(out, y);
        loss = l.value().item();
        tape.backward(l);
      } catch (const NonFiniteError& e) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                 std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                 std::to_string(step) + ": loss is not finite");
      }
      opt.step(params, st.lr);
      loss_sum += loss * static_cast<double>(chunk.size());
    }
    st.train_loss = loss_sum / static_cast<double>(windows.size());
    st.valid_rmse = one_step_rmse(pred, valid_trajs, t_in);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (st.valid_rmse < result.best_valid) {
      result.best_valid = st.valid_rmse;
      result.best_epoch = epoch;
      best.clear();
      for (const auto* p : params) best.push_back(p->value);
    }
    result.history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  if (!best.empty())
    for (std::size_t q = 0; q < params.size(); ++q) params[q]->value = best[q];
  return result;
}

}  // namespace gfno::harness
