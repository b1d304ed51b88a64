#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gfno/checks.hpp"
#include "gfno/group.hpp"
#include "gfno/tensor.hpp"

namespace gfno::test {

// Hand-rolled generators for the property tests.
struct Gen {
  std::mt19937_64 rng;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::uint64_t seed() { return rng(); }
  std::size_t size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  }
  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); }
  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

  Tensor real(const Shape& s) { return checks::random_tensor(s, seed()); }
  Tensor complex(const Shape& s) { return checks::random_tensor(s, seed(), DType::complex128); }

  group::StabilizerElement stab(group::Group g) {
    const auto all = group::elements(g);
    return all[size(0, all.size() - 1)];
  }
  group::GroupElement element(group::Group g, long n) {
    return {stab(g), {integer(-n, n), integer(-n, n)}};
  }
};

template <class F>
void for_all(std::size_t trials, std::uint64_t seed, F&& body) {
  Gen gen(seed);
  for (std::size_t t = 0; t < trials; ++t) body(gen);
}

}  // namespace gfno::test
