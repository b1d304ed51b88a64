#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfno/harness.hpp"
#include "gfno/operator.hpp"
#include "gfno/tensor.hpp"

/// Property and oracle checks shared by the `check` subcommand and the
/// acceptance binary. Each returns a measured value next to its pinned bound.
namespace gfno::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// Uniform(-1, 1) entries; complex tensors draw both parts.
Tensor random_tensor(const Shape& shape, std::uint64_t seed, DType dtype = DType::real64);
/// Random real field whose spectrum is zero outside |xi|_inf <= max_mode.
Tensor bandlimited_field(const Shape& shape, std::size_t max_mode, std::uint64_t seed);

/// Transform of a modularly rotated field equals the rotated transform.
CheckResult dft_equivariance(std::size_t fields, std::uint64_t seed);
/// gconv_freq with the full band against the spatial double sum.
CheckResult freq_vs_spatial(std::uint64_t seed);

/// max over stabilizer elements of max|m(L_s x) - L_s m(x)|, center rotations.
double model_equivariance_error(model::Model& m, const Tensor& x);
/// |rotation_test - rollout_eval| / rollout_eval.
double rotation_consistency(model::Model& m, const Tensor& trajs, std::size_t in_steps);
/// Randomly initialized p4 and p4m models on short solver trajectories.
CheckResult random_model_equivariance(std::uint64_t seed);
CheckResult trained_model_equivariance(model::Model& m, const Tensor& trajs, std::uint64_t seed);

/// Finite differences over every primitive and the full one-step loss.
CheckResult gradient_suite(std::uint64_t seed);

CheckResult solver_single_mode();
CheckResult solver_richardson();
CheckResult solver_enstrophy();

/// Sym forcing must stay below the bound, nonsym must exceed its floor.
CheckResult closure(std::size_t n, double t_check, std::uint64_t seed);

/// Fine-grid output against trigonometric interpolation of the coarse output
/// on a band-limited input.
CheckResult bandlimited_superres(model::Model& m, std::size_t n, std::uint64_t seed);

/// The three reference configurations at k = 12, four layers.
CheckResult parameter_counts();

/// Everything that needs no trained model.
std::vector<CheckResult> run_checks(std::uint64_t seed = 0);

std::string format(const CheckResult& r);

}  // namespace gfno::checks
