#include "doctest.h"

#include <cmath>
#include <functional>

#include "ihmp/model.hpp"
#include "ihmp/simulate.hpp"
#include "oracles.hpp"

using namespace ihmp;

namespace {

ModelParams two_by_two() {
  ModelParams p = ModelParams::uniform({2, 2}, 1);
  Mat a(2, 2);
  a << 0.1, 0.9, 0.9, 0.1;
  p.switch_trans = a;
  p.chain_trans = {a, a};
  return p;
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

// Number of integer partitions of n with parts at most `largest`.
std::uint64_t partitions_rec(int n, int largest) {
  if (n == 0) return 1;
  std::uint64_t c = 0;
  for (int part = std::min(n, largest); part >= 1; --part) c += partitions_rec(n - part, part);
  return c;
}

}  // namespace

TEST_CASE("validate accepts the two-source scenario parameters") {
  CHECK(validate(two_by_two()).empty());
}

TEST_CASE("validate reports a row that does not sum to one") {
  ModelParams p = two_by_two();
  p.switch_trans(0, 1) = 0.6;
  p.switch_trans(0, 0) = 0.5;
  const auto v = validate(p);
  REQUIRE_FALSE(v.empty());
  CHECK(mentions(v, "row 1 of A^z sums to 1.1"));
}

TEST_CASE("validate reports a singular covariance and does not mutate input") {
  ModelParams p = ModelParams::uniform({1}, 2);
  p.shared_cov << 1, 1, 1, 1;
  const ModelParams before = p;
  const auto v = validate(p);
  CHECK(mentions(v, "positive-definite"));
  CHECK(p.shared_cov == before.shared_cov);
}

TEST_CASE("validate lists every violation at once") {
  ModelParams p = two_by_two();
  p.switch_init(0) = 0.9;
  p.chain_trans[1](1, 1) = -0.5;
  p.shared_cov(0, 0) = -1.0;
  CHECK(validate(p).size() >= 3);
}

TEST_CASE("log emission matches the scalar normal density") {
  ModelParams p = ModelParams::uniform({1}, 1);
  Vec x(1);
  x << 0.0;
  CHECK(log_emission(p, 0, 0, x) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-12));
  p.means[0](0, 0) = 1.0;
  x << 2.0;
  CHECK(log_emission(p, 0, 0, x) == doctest::Approx(-0.5 - 0.5 * std::log(2 * M_PI)));
}

TEST_CASE("two-dimensional log emission equals a product of scalar densities") {
  ModelParams p = ModelParams::uniform({1}, 2);
  p.means[0] << 1, 2;
  p.shared_cov = 0.25 * Mat::Identity(2, 2);
  Vec x(2);
  x << 1, 2;
  const double oracle = std::log(oracle::normal_pdf_1d(1, 1, 0.25) * oracle::normal_pdf_1d(2, 2, 0.25));
  CHECK(log_emission(p, 0, 0, x) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(log_emission(p, 0, 0, x) == doctest::Approx(-std::log(2 * M_PI * 0.25)).epsilon(1e-12));
}

TEST_CASE("log emission agrees with an explicit-inverse density on random covariances") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = oracle::random_params(rng, {2, 3}, 3);
    Vec x(3);
    for (int d = 0; d < 3; ++d) x(d) = rng.normal();
    const double ref = std::log(oracle::normal_pdf(x, p.means[1].row(2).transpose(), p.shared_cov));
    CHECK(log_emission(p, 1, 2, x) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("log emission rejects out-of-range indices") {
  const ModelParams p = two_by_two();
  Vec x = Vec::Zero(1);
  CHECK_THROWS_AS(log_emission(p, 2, 0, x), Error);
  CHECK_THROWS_AS(log_emission(p, 0, 5, x), Error);
}

TEST_CASE("gated transitions follow A^m when active and the identity when idle") {
  const ModelParams p = two_by_two();
  CHECK(gated_transition_logprob(p, 0, 0, 1, true) == doctest::Approx(std::log(0.9)));
  CHECK(gated_transition_logprob(p, 0, 1, 1, false) == 0.0);
  CHECK(gated_transition_logprob(p, 0, 0, 1, false) <= kLogZero);
}

TEST_CASE("log joint equals a hand-evaluated product") {
  ModelParams p = two_by_two();
  p.means[0] << 1, 2;
  p.means[1] << 3, 4;
  p.shared_cov(0, 0) = 0.09;
  LatentTrajectory tr;
  tr.switch_labels = {0, 1, 1};
  tr.states = {{1, 1, 1}, {0, 0, 1}};
  const ObservationSequence obs = ObservationSequence::from_scalars({2.1, 2.9, 4.2});
  const double v = 0.09;
  const double ref = std::log(0.5) + std::log(0.5) + std::log(0.5) +  // pi^z, pi^1, pi^2
                     std::log(oracle::normal_pdf_1d(2.1, 2, v)) +
                     std::log(0.9) + std::log(0.1) + std::log(oracle::normal_pdf_1d(2.9, 3, v)) +
                     std::log(0.1) + std::log(0.9) + std::log(oracle::normal_pdf_1d(4.2, 4, v));
  CHECK(log_joint(p, tr, obs) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("an idle chain that moves is rejected") {
  const ModelParams p = two_by_two();
  LatentTrajectory tr;
  tr.switch_labels = {0, 0};
  tr.states = {{0, 1}, {0, 1}};
  CHECK_THROWS_AS(check_trajectory(p, tr), Error);
}

TEST_CASE("stationary distribution of symmetric and asymmetric chains") {
  Mat a(2, 2);
  a << 0.1, 0.9, 0.9, 0.1;
  const Vec xi = stationary_distribution(a);
  CHECK(xi(0) == doctest::Approx(0.5));
  a << 0.7, 0.3, 0.2, 0.8;
  const Vec x2 = stationary_distribution(a);
  CHECK(x2(0) == doctest::Approx(0.4));
  CHECK((x2.transpose() * a - x2.transpose()).norm() < 1e-12);
}

TEST_CASE("stationary distribution rejects reducible chains") {
  CHECK_THROWS_AS(stationary_distribution(Mat::Identity(2, 2)), Error);
}

TEST_CASE("property: stationary vector is a fixed point for random ergodic chains") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(2, 6);
    Mat a(n, n);
    for (int i = 0; i < n; ++i) a.row(i) = oracle::random_simplex(rng, n).transpose();
    const Vec xi = stationary_distribution(a);
    CHECK(std::abs(xi.sum() - 1.0) < 1e-12);
    CHECK((a.transpose() * xi - xi).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("partition counts at ten symbols") {
  CHECK(count_partitions_ihmp(10) == 42);
  CHECK(count_partitions_imp(10) == 115975);
}

TEST_CASE("partition counts agree with independent enumerations") {
  for (int n = 1; n <= 9; ++n) {
    CHECK(count_partitions_ihmp(n) == partitions_rec(n, n));
    CHECK(count_partitions_imp(n) == oracle::set_partitions(n).size());
  }
  // Stirling numbers of the second kind summed over block counts.
  for (int n = 1; n <= 20; ++n) {
    std::vector<std::vector<std::uint64_t>> s(n + 1, std::vector<std::uint64_t>(n + 1, 0));
    s[0][0] = 1;
    for (int i = 1; i <= n; ++i)
      for (int k = 1; k <= i; ++k) s[i][k] = k * s[i - 1][k] + s[i - 1][k - 1];
    std::uint64_t bell = 0;
    for (int k = 1; k <= n; ++k) bell += s[n][k];
    CHECK(count_partitions_imp(n) == bell);
  }
}

TEST_CASE("partition counts reject N < 1 and overflow") {
  CHECK_THROWS_AS(count_partitions_imp(0), Error);
  CHECK_THROWS_AS(count_partitions_imp(40), Error);
}
