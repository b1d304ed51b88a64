#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gfno/autodiff.hpp"
#include "gfno/group.hpp"
#include "gfno/operator.hpp"
#include "gfno/tensor.hpp"

namespace gfno::harness {

enum class Strategy { markov, teacher_forcing, recurrent };
enum class DownsampleMode { strided, meanpool };

Strategy parse_strategy(const std::string& s);
std::string to_string(Strategy s);

/// Reduces the last two axes by `factor`.
Tensor downsample(const Tensor& x, std::size_t factor, DownsampleMode mode = DownsampleMode::strided);

struct Sample {
  Tensor input;   // (T_in, n, n)
  Tensor target;  // (1, n, n), or (L - T_in, n, n) for recurrent
};

/// traj is (L, n, n).
std::vector<Sample> make_pairs(const Tensor& traj, Strategy strategy, std::size_t in_steps);

/// Draws one stabilizer element per sample (axis 0) and applies it to the
/// inputs and targets alike. Returns the drawn canonical indices.
std::vector<std::size_t> augment(Tensor& inputs, Tensor& targets, group::Group g, std::mt19937_64& rng);

/// Mean over axis-0 items of ||pred_i - true_i|| / ||true_i||.
double rmse_rel(const Tensor& pred, const Tensor& truth);

/// Batched next-frame map: windows (B, T_in, n, n) -> (B, 1, n, n).
using Predictor = std::function<Tensor(const Tensor& windows)>;
Predictor model_predictor(model::Model& m);

/// Autoregressive continuation: returns (B, steps, n, n).
Tensor rollout(const Predictor& p, const Tensor& windows, std::size_t steps);

/// trajs (N, L, n, n): roll out from the first T_in frames and score each
/// trajectory's predicted frames T_in .. L-1 as one item.
double rollout_eval(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch = 20);
/// Every frame rotated 90 degrees counter-clockwise about the grid center.
double rotation_test(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch = 20);
/// Model applied directly on the fine grid.
double superres_eval(const Predictor& p, const Tensor& fine_trajs, std::size_t in_steps, std::size_t batch = 20);
/// Coarse rollout on strided-downsampled inputs, trigonometrically upsampled.
double interp_baseline(const Predictor& p, const Tensor& fine_trajs, std::size_t factor, std::size_t in_steps,
                       std::size_t batch = 20);
/// One-step R-MSE over every teacher-forcing pair.
double one_step_rmse(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch = 64);

double cosine_lr(double lr0, double t, double t_total);

/// Adam with decoupled weight decay; complex entries update as real pairs.
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double weight_decay = 1e-4);
  void step(const std::vector<ad::Parameter*>& params, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
  Strategy strategy = Strategy::teacher_forcing;
  std::size_t in_steps = 10;
  std::size_t epochs = 20;
  std::size_t batch = 20;
  double lr0 = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  group::Group augment = group::Group::none;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_rmse = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
};

/// Minimizes the relative L2 loss with AdamW and a per-epoch cosine schedule;
/// keeps (and restores) the parameters of the best validation epoch.
TrainResult train(model::Model& m, const Tensor& train_trajs, const Tensor& valid_trajs, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

struct EvalReport {
  std::optional<double> test;
  std::optional<double> test_rot90;
  std::optional<double> superres;
  std::optional<double> interp_baseline;
  std::string model_id;
  std::string dataset_id;
  std::vector<std::uint64_t> seeds;
  std::string interp_scheme = "trigonometric";
};

std::string to_json(const EvalReport& r);

/// Keeps freed tensor buffers in the heap rather than returning them to the
/// kernel after every step (glibc only; no-op elsewhere).
void tune_allocator();

}  // namespace gfno::harness
