#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>

namespace specsense {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent per-trial streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr Seed mix_seed(Seed base, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

constexpr Seed mix_seed(Seed base, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_seed(mix_seed(base, a), b);
}

inline Rng make_rng(Seed seed) { return Rng(splitmix64(seed)); }

// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

inline void fill_complex_gaussian(Rng& rng, double variance, std::span<std::complex<double>> out) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (auto& z : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = {re, im};
  }
}

}  // namespace specsense
