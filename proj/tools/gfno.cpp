#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gfno/checks.hpp"
#include "gfno/harness.hpp"
#include "gfno/operator.hpp"
#include "gfno/pde.hpp"

using namespace gfno;
using nlohmann::json;

namespace {

struct GenArgs {
  pde::NSConfig cfg;
  std::string forcing = "sym";
  std::string scheme = "cn_heun";
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string data, valid_data, out;
  std::string variant = "gfno", group = "p4", strategy = "tf", augment = "none", pos_enc;
  std::size_t d_z = 10, modes = 8, layers = 4, in_steps = 10, epochs = 20, batch = 20, valid_count = 0;
  double lr = 1e-3, weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string ckpt, data, report, tasks = "rollout,rot90";
  std::size_t factor = 2;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int run_gen(GenArgs a) {
  a.cfg.forcing = pde::parse_forcing(a.forcing);
  a.cfg.scheme = pde::parse_scheme(a.scheme);
  const pde::Dataset d = pde::generate_dataset(a.cfg, a.count, a.seed);
  pde::save_dataset(d, a.out);
  std::printf("wrote %zu trajectories (%zu frames, %zux%zu) to %s\n", a.count, a.cfg.T + 1, a.cfg.n, a.cfg.n,
              a.out.c_str());
  return 0;
}

int run_train(const TrainArgs& a) {
  model::ModelConfig mc;
  mc.variant = model::parse_variant(a.variant);
  mc.group = group::parse_group(a.group);
  if (mc.variant == model::Variant::fno) mc.group = group::Group::none;
  mc.d_z = a.d_z;
  mc.k = a.modes;
  mc.layers = a.layers;
  mc.pos_enc = a.pos_enc.empty()
                   ? (mc.variant == model::Variant::fno ? model::PosEnc::cartesian : model::PosEnc::symmetric)
                   : model::parse_pos_enc(a.pos_enc);
  harness::TrainConfig tc;
  tc.strategy = harness::parse_strategy(a.strategy);
  tc.in_steps = tc.strategy == harness::Strategy::markov ? 1 : a.in_steps;
  mc.in_steps = tc.in_steps;
  tc.epochs = a.epochs;
  tc.batch = a.batch;
  tc.lr0 = a.lr;
  tc.weight_decay = a.weight_decay;
  tc.augment = group::parse_group(a.augment);
  tc.seed = a.seed;
  mc.validate();

  pde::Dataset all = pde::load_dataset(a.data);
  pde::Dataset train, valid;
  if (!a.valid_data.empty()) {
    train = all;
    valid = pde::load_dataset(a.valid_data);
  } else {
    const std::size_t nv = a.valid_count ? a.valid_count : std::max<std::size_t>(1, all.size() / 10);
    if (nv >= all.size()) throw std::invalid_argument("train: validation split leaves no training data");
    train = all.subset(0, all.size() - nv);
    valid = all.subset(all.size() - nv, nv);
  }
  model::Model m(mc, a.seed);
  std::printf("model %s/%s d_z=%zu k=%zu layers=%zu: %zu parameters\n", model::to_string(mc.variant).c_str(),
              group::to_string(mc.group).c_str(), mc.d_z, mc.k, mc.layers, m.param_count());
  const auto result = harness::train(m, train.data, valid.data, tc, [](const harness::EpochStats& s) {
    std::printf("epoch %3zu  lr %.3e  train %.5f  valid %.5f  (%.1fs)\n", s.epoch, s.lr, s.train_loss, s.valid_rmse,
                s.seconds);
    std::fflush(stdout);
  });
  m.save(a.out);
  json meta;
  meta["n"] = train.data.shape()[2];
  meta["seed"] = a.seed;
  meta["strategy"] = harness::to_string(tc.strategy);
  meta["augment"] = group::to_string(tc.augment);
  meta["epochs"] = tc.epochs;
  meta["batch"] = tc.batch;
  meta["lr0"] = tc.lr0;
  meta["weight_decay"] = tc.weight_decay;
  meta["best_epoch"] = result.best_epoch;
  meta["best_valid_rmse"] = result.best_valid;
  meta["data"] = a.data;
  meta["data_seeds"] = all.manifest.seeds;
  meta["param_count"] = m.param_count();
  for (const auto& s : result.history)
    meta["history"].push_back({{"epoch", s.epoch}, {"lr", s.lr}, {"train_loss", s.train_loss}, {"valid_rmse", s.valid_rmse}});
  std::ofstream(std::filesystem::path(a.out) / "train_meta.json") << meta.dump(2) << "\n";
  std::printf("best epoch %zu, validation R-MSE %.5f; checkpoint in %s\n", result.best_epoch, result.best_valid,
              a.out.c_str());
  return 0;
}

int run_eval(const EvalArgs& a) {
  model::Model m = model::Model::load(a.ckpt);
  const pde::Dataset d = pde::load_dataset(a.data);
  const std::size_t n_data = d.data.shape()[2];
  if (a.factor == 0 || n_data % a.factor != 0) {
    throw std::invalid_argument("eval: factor " + std::to_string(a.factor) + " does not divide data grid " +
                                std::to_string(n_data));
  }
  std::uint64_t train_seed = 0;
  const auto meta_path = std::filesystem::path(a.ckpt) / "train_meta.json";
  if (std::ifstream is(meta_path); is) {
    const json meta = json::parse(is);
    const std::size_t n_train = meta.at("n").get<std::size_t>();
    train_seed = meta.value("seed", std::uint64_t{0});
    if (n_data / a.factor != n_train) {
      throw std::invalid_argument("eval: data grid " + std::to_string(n_data) + " / factor " + std::to_string(a.factor) +
                                  " does not match the training grid " + std::to_string(n_train));
    }
  }
  const std::size_t t_in = m.config().in_steps;
  const auto pred = harness::model_predictor(m);
  const Tensor coarse = a.factor == 1 ? d.data : harness::downsample(d.data, a.factor);
  harness::EvalReport r;
  r.model_id = a.ckpt;
  r.dataset_id = a.data;
  r.seeds = d.manifest.seeds;
  r.seeds.insert(r.seeds.begin(), train_seed);
  for (const auto& task : split(a.tasks)) {
    if (task == "rollout") {
      r.test = harness::rollout_eval(pred, coarse, t_in);
    } else if (task == "rot90") {
      r.test_rot90 = harness::rotation_test(pred, coarse, t_in);
    } else if (task == "superres") {
      r.superres = harness::superres_eval(pred, d.data, t_in);
    } else if (task == "interp") {
      r.interp_baseline = harness::interp_baseline(pred, d.data, a.factor, t_in);
    } else {
      throw std::invalid_argument("eval: unknown task '" + task + "' (rollout, rot90, superres, interp)");
    }
  }
  const std::string out = harness::to_json(r);
  if (!a.report.empty()) std::ofstream(a.report) << out << "\n";
  std::printf("%s\n", out.c_str());
  return 0;
}

int run_check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : checks::run_checks(seed)) {
    std::printf("%s\n", checks::format(r).c_str());
    std::fflush(stdout);
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  harness::tune_allocator();
  CLI::App app{"Group-equivariant Fourier neural operators: data, training and evaluation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-ns", "Generate Navier-Stokes vorticity trajectories");
  g->add_option("--n", gen.cfg.n, "Grid extent")->default_val(32);
  g->add_option("--nu", gen.cfg.nu, "Viscosity")->default_val(1e-4);
  g->add_option("--dt", gen.cfg.dt, "Solver step")->default_val(1e-3);
  g->add_option("--t", gen.cfg.T, "Recorded horizon (frames after the initial one)")->default_val(20);
  g->add_option("--record-dt", gen.cfg.record_dt, "Time between recorded frames")->default_val(1.0);
  g->add_option("--forcing", gen.forcing, "sym, nonsym or none")->default_val("sym");
  g->add_option("--scheme", gen.scheme, "cn_heun or cn_euler")->default_val("cn_heun");
  g->add_option("--count", gen.count, "Number of trajectories")->default_val(1);
  g->add_option("--seed", gen.seed, "First seed; trajectory i uses seed + i")->default_val(0);
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a generated dataset");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--valid-data", tr.valid_data, "Separate validation dataset");
  t->add_option("--valid-count", tr.valid_count, "Trailing trajectories held out when --valid-data is absent");
  t->add_option("--model", tr.variant, "gfno, fno or radial-fno")->default_val("gfno");
  t->add_option("--group", tr.group, "p4, p4m or none")->default_val("p4");
  t->add_option("--dz", tr.d_z, "Latent width")->default_val(10);
  t->add_option("--modes", tr.modes, "Fourier modes k per axis")->default_val(8);
  t->add_option("--layers", tr.layers, "Fourier layers")->default_val(4);
  t->add_option("--in-steps", tr.in_steps, "Input window T_in")->default_val(10);
  t->add_option("--strategy", tr.strategy, "markov, tf or recurrent")->default_val("tf");
  t->add_option("--augment", tr.augment, "none, p4 or p4m")->default_val("none");
  t->add_option("--pos-enc", tr.pos_enc, "none, symmetric or cartesian (default by model)");
  t->add_option("--epochs", tr.epochs, "Epochs")->default_val(20);
  t->add_option("--batch", tr.batch, "Batch size")->default_val(20);
  t->add_option("--lr", tr.lr, "Initial learning rate")->default_val(1e-3);
  t->add_option("--weight-decay", tr.weight_decay, "Decoupled weight decay")->default_val(1e-4);
  t->add_option("--seed", tr.seed, "Initialization and shuffling seed")->default_val(0);
  t->add_option("--out", tr.out, "Checkpoint directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint directory")->required();
  e->add_option("--data", ev.data, "Test dataset at the fine resolution")->required();
  e->add_option("--tasks", ev.tasks, "Comma list of rollout, rot90, superres, interp")->default_val("rollout,rot90");
  e->add_option("--factor", ev.factor, "Data grid / training grid")->default_val(2);
  e->add_option("--report", ev.report, "JSON report path");

  std::uint64_t check_seed = 0;
  auto* c = app.add_subcommand("check", "Run the property and oracle suite");
  c->add_option("--seed", check_seed, "Seed for random inputs")->default_val(0);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return run_gen(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*c) return run_check(check_seed);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
