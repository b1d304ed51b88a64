// Library kernels (FFTW, OpenMP) against the serial direct-summation references.
#include <benchmark/benchmark.h>

#include "gfno/autodiff.hpp"
#include "gfno/checks.hpp"
#include "gfno/operator.hpp"
#include "gfno/pde.hpp"
#include "gfno/reference.hpp"
#include "gfno/spectral.hpp"

using namespace gfno;

namespace {

std::size_t n_of(const benchmark::State& s) { return static_cast<std::size_t>(s.range(0)); }

void BM_dft2(benchmark::State& s) {
  const Tensor x = checks::random_tensor({n_of(s), n_of(s)}, 1);
  for (auto _ : s) benchmark::DoNotOptimize(spectral::dft2(x));
}
void BM_dft2_reference(benchmark::State& s) {
  const Tensor x = checks::random_tensor({n_of(s), n_of(s)}, 1);
  for (auto _ : s) benchmark::DoNotOptimize(reference::dft2(x));
}

void BM_band_rdft(benchmark::State& s) {
  const Tensor x = checks::random_tensor({4, 20, n_of(s), n_of(s)}, 2);
  for (auto _ : s) benchmark::DoNotOptimize(spectral::band_rdft(x, 8));
}
void BM_band_rdft_reference(benchmark::State& s) {
  const Tensor x = checks::random_tensor({4, 20, n_of(s), n_of(s)}, 2);
  for (auto _ : s) benchmark::DoNotOptimize(reference::band_rdft(x, 8));
}

void BM_contract(benchmark::State& s) {
  const Tensor x = checks::random_tensor({8, 40, n_of(s), n_of(s)}, 3);
  const Tensor w = checks::random_tensor({40, 40}, 4);
  for (auto _ : s) benchmark::DoNotOptimize(contract_channels_batched(x, w));
}
void BM_contract_reference(benchmark::State& s) {
  const Tensor x = checks::random_tensor({8, 40, n_of(s), n_of(s)}, 3);
  const Tensor w = checks::random_tensor({40, 40}, 4);
  for (auto _ : s) benchmark::DoNotOptimize(reference::contract(x, w));
}

void BM_spectral_conv(benchmark::State& s) {
  const std::size_t k = 8;
  const Tensor x = checks::random_tensor({4, 20, n_of(s), n_of(s)}, 5);
  const Tensor w = checks::random_tensor({(2 * k - 1) * k, 20, 20}, 6, DType::complex128);
  for (auto _ : s) {
    ad::Tape tape;
    benchmark::DoNotOptimize(ad::spectral_conv(tape.constant(x), tape.constant(w), k).value());
  }
}
void BM_spectral_conv_reference(benchmark::State& s) {
  const std::size_t k = 8;
  const Tensor x = checks::random_tensor({4, 20, n_of(s), n_of(s)}, 5);
  const Tensor w = checks::random_tensor({(2 * k - 1) * k, 20, 20}, 6, DType::complex128);
  for (auto _ : s) benchmark::DoNotOptimize(reference::spectral_conv(x, w, k));
}

void BM_gconv_freq(benchmark::State& s) {
  const std::size_t n = n_of(s);
  const Tensor f = checks::random_tensor({2, 4, n, n}, 7);
  const Tensor bank = checks::random_tensor({2, 2, 4, n, n}, 8, DType::complex128);
  for (auto _ : s) benchmark::DoNotOptimize(model::gconv_freq_complex(f, bank, group::Group::p4));
}
void BM_gconv_spatial_reference(benchmark::State& s) {
  const std::size_t n = n_of(s);
  const Tensor f = checks::random_tensor({2, 4, n, n}, 7);
  const Tensor bank = checks::random_tensor({2, 2, 4, n, n}, 8, DType::complex128);
  for (auto _ : s) benchmark::DoNotOptimize(reference::spatial_gconv(f, bank, group::Group::p4));
}

void BM_ns_step(benchmark::State& s) {
  pde::NSConfig c;
  c.n = n_of(s);
  const pde::NsSolver solver(c);
  const Tensor w = checks::bandlimited_field({c.n, c.n}, 4, 9);
  for (auto _ : s) benchmark::DoNotOptimize(solver.step(w));
}

}  // namespace

BENCHMARK(BM_dft2)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_dft2_reference)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_band_rdft)->Arg(32)->Arg(64);
BENCHMARK(BM_band_rdft_reference)->Arg(32);
BENCHMARK(BM_contract)->Arg(32)->Arg(64);
BENCHMARK(BM_contract_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_spectral_conv)->Arg(32)->Arg(64);
BENCHMARK(BM_spectral_conv_reference)->Arg(32);
BENCHMARK(BM_gconv_freq)->Arg(5)->Arg(9)->Arg(15);
BENCHMARK(BM_gconv_spatial_reference)->Arg(5)->Arg(9)->Arg(15);
BENCHMARK(BM_ns_step)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
