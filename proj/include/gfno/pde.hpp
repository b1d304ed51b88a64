#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfno/group.hpp"
#include "gfno/tensor.hpp"

/// Pseudo-spectral solver for 2-D incompressible Navier-Stokes in vorticity
/// form on the unit torus, x = (i/n, j/n).
namespace gfno::pde {

enum class Forcing { none, nonsym, sym };
/// Time stepping for the explicit (advection + forcing) part; diffusion is
/// always Crank-Nicolson.
enum class Scheme { cn_heun, cn_euler };

Forcing parse_forcing(const std::string& s);
std::string to_string(Forcing f);
Scheme parse_scheme(const std::string& s);
std::string to_string(Scheme s);

struct NSConfig {
  std::size_t n = 32;
  double nu = 1e-4;
  double dt = 1e-3;
  double record_dt = 1.0;
  std::size_t T = 20;
  Forcing forcing = Forcing::sym;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::cn_heun;

  std::size_t steps_per_record() const;
  void validate() const;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t step, Tensor prefix)
      : std::runtime_error("blow-up: non-finite vorticity after step " + std::to_string(step)),
        step_(step),
        prefix_(std::move(prefix)) {}
  std::size_t step() const noexcept { return step_; }
  /// Frames recorded before the failure, (m, n, n); rank 0 if none.
  const Tensor& prefix() const noexcept { return prefix_; }

 private:
  std::size_t step_;
  Tensor prefix_;
};

/// sigma(xi) = tau^{alpha-1} (4 pi^2 |xi|^2 + tau^2)^{-alpha/2}, alpha 2.5, tau 7.
double grf_sigma(double xi1, double xi2);
/// Real periodic zero-mean field whose Fourier coefficients X/n^2 have
/// E|X/n^2|^2 = sigma^2. Self-conjugate modes are zero.
Tensor grf_sample(std::size_t n, std::uint64_t seed);
Tensor forcing_field(Forcing kind, std::size_t n);

/// Velocity (2, n, n) recovered from vorticity via the stream function.
Tensor velocity(const Tensor& w);
/// Spectral divergence of a (2, n, n) velocity field.
Tensor divergence(const Tensor& u);

class NsSolver {
 public:
  explicit NsSolver(const NSConfig& cfg);
  const NSConfig& config() const { return cfg_; }

  /// One time step; throws BlowUpError(step_index) on NaN/Inf.
  Tensor step(const Tensor& w, std::size_t step_index = 0) const;
  /// Frames 0..T at every record_dt starting from w0, (T+1, n, n).
  Tensor integrate(const Tensor& w0) const;

 private:
  Tensor nonlinear_hat(const Tensor& w_hat) const;
  Tensor advance(const Tensor& w_hat, const Tensor& explicit_hat) const;

  NSConfig cfg_;
  Tensor f_hat_;
  std::vector<double> k1_, k2_;     // 2 pi xi per half-spectrum entry (Nyquist zeroed)
  std::vector<double> inv_lap_;     // 1 / (4 pi^2 |xi|^2), 0 at the origin
  std::vector<double> cn_a_;        // dt nu kappa^2 / 2
  std::vector<double> dealias_;     // 2/3 rule, origin excluded
};

Tensor ns_step(const Tensor& w, const NSConfig& cfg);

struct Trajectory {
  Tensor frames;  // (T+1, n, n)
  NSConfig config;
};

Trajectory ns_solve(const NSConfig& cfg);

/// ||act(g, w(t)) - w_g(t)|| / ||w(t)|| where w_g starts from act(g, w0).
double closure_check(const NSConfig& cfg, double t_check, const group::GroupElement& g);

struct DatasetManifest {
  std::size_t n = 0;
  double nu = 0.0;
  double dt = 0.0;
  double record_dt = 1.0;
  std::size_t T = 0;
  Forcing forcing = Forcing::sym;
  Scheme scheme = Scheme::cn_heun;
  std::vector<std::uint64_t> seeds;
  std::string generator_version;
};

struct Dataset {
  Tensor data;  // (N, T+1, n, n)
  DatasetManifest manifest;

  std::size_t size() const { return data.shape()[0]; }
  /// Trajectories [begin, begin + count).
  Dataset subset(std::size_t begin, std::size_t count) const;
};

extern const char* const kGeneratorVersion;

/// Seeds seed0 .. seed0 + count - 1, generated in parallel, each trajectory
/// bit-identical regardless of scheduling.
Dataset generate_dataset(const NSConfig& base, std::size_t count, std::uint64_t seed0);
void save_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace gfno::pde
