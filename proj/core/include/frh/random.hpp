#pragma once

#include "frh/frame.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace frh {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Sub-seed for a named consumer: mix64(seed ^ fnv1a64(label)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/**
 * Platform-stable generator. std::mt19937_64 is fully specified by the
 * standard; the distributions are not, so they are implemented here.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (both outputs used).
  double gaussian();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Matrix gaussian_matrix(Index rows, Index cols);
  /// d x k matrix with orthonormal columns, Haar-distributed (QR of a Gaussian).
  Matrix orthonormal_frame(Index d, Index k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/**
 * Candidate sampler for unguided top-k decoding.
 *
 * state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64),
 * index = (state >> 33) mod k. The initial state is the run seed.
 */
class LcgSampler {
 public:
  explicit LcgSampler(std::uint64_t seed) : state_(seed) {}
  std::uint64_t pick(std::uint64_t k);

 private:
  std::uint64_t state_;
};

}  // namespace frh
