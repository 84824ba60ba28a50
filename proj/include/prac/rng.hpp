#pragma once

#include <cstdint>
#include <string>

#include "prac/matrix.hpp"

namespace prac {

/// SplitMix64 finalizer; the basis of all stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed from (seed, index). Used to give every
/// Monte Carlo trial, refresh step, and cache key its own stream, so results
/// do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// FNV-1a over a string; lets cache keys participate in seed derivation.
std::uint64_t hash_string(const std::string& s);

/// xoshiro256** stream with a SplitMix64-expanded seed. Fully deterministic
/// across platforms; cheap enough to construct one per trial.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1).
    double next_uniform();
    /// Standard normal via the polar method.
    double next_gaussian();

  private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// rows×cols matrix of i.i.d. N(0,1) entries, bit-identical for equal seeds.
DenseMatrix sample_gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// In-place variant for hot loops; target is resized as needed.
void sample_gaussian_into(DenseMatrix& target, std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace prac
