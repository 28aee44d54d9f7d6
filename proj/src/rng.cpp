#include "ihmp/rng.hpp"

namespace ihmp {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x632BE59BD9B4E019ULL)));
}

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

int Rng::uniform_int(int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(engine_);
}

int Rng::categorical(const Vec& probs) {
  const double u = uniform() * probs.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  // Round-off: return the last index with positive mass.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
    if (probs(i) > 0.0) return static_cast<int>(i);
  return static_cast<int>(probs.size()) - 1;
}

double Rng::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

Vec Rng::dirichlet(int n, double alpha) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = gamma(alpha);
  return v / v.sum();
}

}  // namespace ihmp
