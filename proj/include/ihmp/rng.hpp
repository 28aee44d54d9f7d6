#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ihmp/common.hpp"

namespace ihmp {

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seedable, splittable random source (mt19937_64 underneath).
///
/// split(k) derives a child stream from the construction seed and k only, so
/// child streams do not depend on how much the parent has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t stream) const;

  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  double normal();                           // N(0, 1)
  int uniform_int(int lo, int hi);           // inclusive
  int categorical(const Vec& probs);
  double gamma(double shape);

  /// Dirichlet(alpha, ..., alpha) draw of length n.
  Vec dirichlet(int n, double alpha);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ihmp
