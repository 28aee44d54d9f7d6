#include "doctest.h"

#include <cmath>

#include "ihmp/error_bound.hpp"
#include "oracles.hpp"

using namespace ihmp;

namespace {

BoundInputs random_inputs(Rng& rng) {
  BoundInputs in;
  auto row_stochastic = [&]() {
    Mat a(2, 2);
    for (int i = 0; i < 2; ++i) a.row(i) = oracle::random_simplex(rng, 2).transpose();
    return a;
  };
  in.switch_trans = row_stochastic();
  in.chain_trans = {row_stochastic(), row_stochastic()};
  for (int y = 0; y < 2; ++y)
    for (int k = 0; k < 2; ++k) in.means[y](k) = rng.uniform(-3.0, 3.0);
  in.sigma = rng.uniform(0.1, 1.5);
  return in;
}

// Stationary vector of a 2x2 chain in closed form.
Vec xi2(const Mat& a) {
  Vec v(2);
  v << a(1, 0), a(0, 1);
  return v / v.sum();
}

// Log of the prior-weighted density of emitting p from state k of source y.
double weighted_log_density(const BoundInputs& in, int x, int y, int k, double p) {
  const Vec xi = xi2(in.chain_trans[y]);
  double c = std::log(xi(k) * in.switch_trans(x, y));
  for (int j = 0; j < 2; ++j) c += xi(j) * std::log(in.chain_trans[y](j, k));
  const double d = p - in.means[y](k);
  return c - 0.5 * d * d / (in.sigma * in.sigma);
}

double bisect_crossing(const BoundInputs& in, int x, int y, int k, int l) {
  auto f = [&](double p) {
    return weighted_log_density(in, x, y, k, p) - weighted_log_density(in, x, 1 - y, l, p);
  };
  double lo = -1e4, hi = 1e4;
  const double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == (flo > 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

BoundInputs swap_sources(const BoundInputs& in) {
  BoundInputs out = in;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.switch_trans(i, j) = in.switch_trans(1 - i, 1 - j);
  out.chain_trans = {in.chain_trans[1], in.chain_trans[0]};
  out.means = {in.means[1], in.means[0]};
  return out;
}

}  // namespace

TEST_CASE("right tail of the standard normal") {
  CHECK(right_tail_Q(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(right_tail_Q(1.6449) - 0.05) < 1e-4);
  CHECK(std::abs(right_tail_Q(1.96) - 0.025) < 1e-4);
  for (double x = -5.0; x <= 5.0; x += 0.25) CHECK(right_tail_Q(x) + right_tail_Q(-x) == doctest::Approx(1.0));
}

TEST_CASE("property: gamma is the crossing point found by bisection") {
  Rng rng(2024);
  int checked = 0;
  while (checked < 50) {
    const BoundInputs in = random_inputs(rng);
    bool disjoint = true;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) disjoint &= std::abs(in.means[0](k) - in.means[1](l)) > 0.05;
    if (!disjoint) continue;
    const int x = rng.uniform_int(0, 1), y = rng.uniform_int(0, 1);
    const int k = rng.uniform_int(0, 1), l = rng.uniform_int(0, 1);
    CHECK(gamma_threshold(in, x, y, k, l) == doctest::Approx(bisect_crossing(in, x, y, k, l)).epsilon(1e-6));
    ++checked;
  }
}

TEST_CASE("bound values for the separated scenario") {
  CHECK(error_lower_bound(scenario_bound_inputs(1, 0.3)) == doctest::Approx(0.0063).epsilon(0.02));
  CHECK(error_lower_bound(scenario_bound_inputs(1, 0.5)) == doctest::Approx(0.0238).epsilon(0.02));
}

TEST_CASE("bound stays below the Monte-Carlo error of the optimal rule") {
  const int n = 200000;
  for (int s = 1; s <= 3; ++s)
    for (double sd : {0.1, 0.3, 0.5, 0.8}) {
      const BoundInputs in = scenario_bound_inputs(s, sd);
      const double opt = optimal_rule_error(in, n, 7);
      const double se = std::sqrt(std::max(opt * (1 - opt), 1e-6) / n);
      CHECK(error_lower_bound(in) <= opt + 3 * se);
    }
}

TEST_CASE("property: bound is non-decreasing in sigma") {
  for (int s = 1; s <= 3; ++s) {
    double prev = 0.0;
    for (double sd = 0.05; sd <= 1.5; sd += 0.05) {
      const double b = error_lower_bound(scenario_bound_inputs(s, sd));
      CHECK(b >= prev - 1e-12);
      prev = b;
    }
  }
}

TEST_CASE("property: bound is invariant when the sources are relabeled") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const BoundInputs in = random_inputs(rng);
    CHECK(error_lower_bound(swap_sources(in)) == doctest::Approx(error_lower_bound(in)).epsilon(1e-12));
  }
}

TEST_CASE("bound vanishes as sigma goes to zero") {
  for (int s = 1; s <= 3; ++s) CHECK(error_lower_bound(scenario_bound_inputs(s, 1e-3)) < 1e-12);
}

TEST_CASE("bound inputs are validated") {
  BoundInputs in = scenario_bound_inputs(1, 0.3);
  in.sigma = 0.0;
  CHECK_THROWS_AS(error_lower_bound(in), Error);
  in = scenario_bound_inputs(1, 0.3);
  in.means[1](0) = in.means[0](1);
  CHECK_THROWS_AS(error_lower_bound(in), Error);
  in = scenario_bound_inputs(1, 0.3);
  in.switch_trans(0, 0) = 0.7;
  CHECK_THROWS_AS(error_lower_bound(in), Error);
  CHECK_THROWS_AS(gamma_threshold(scenario_bound_inputs(1, 0.3), 2, 0, 0, 0), Error);
}
