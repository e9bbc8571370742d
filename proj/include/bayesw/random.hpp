#pragma once

#include <cstdint>
#include <random>

namespace bayesw {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for replication `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  double u = 0.0;
  while (u <= 0.0) u = uniform01(rng);
  return u;
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Gamma with the given shape and rate.
inline double gamma_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double beta_draw(Rng& rng, double a, double b) {
  const double x = gamma_rate(rng, a, 1.0);
  const double y = gamma_rate(rng, b, 1.0);
  return x / (x + y);
}

/// Inverse gamma with density proportional to v^{-(shape+1)} exp(-rate / v).
inline double inverse_gamma(Rng& rng, double shape, double rate) {
  return 1.0 / gamma_rate(rng, shape, rate);
}

}  // namespace bayesw
