#include "doctest.h"

#include <cmath>

#include "ihmp/eval.hpp"
#include "ihmp/inference.hpp"
#include "ihmp/simulate.hpp"
#include "oracles.hpp"

using namespace ihmp;

namespace {

bool non_decreasing(const std::vector<double>& v, double rel) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - rel * std::max(1.0, std::abs(v[i - 1]))) return false;
  return true;
}

}  // namespace

TEST_CASE("property: both ELBOs lower-bound the exact log-likelihood") {
  Rng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const ModelParams p = oracle::random_params(rng, {2, 3});
    const Dataset d = sample_ihmp(p, 30, 500 + trial);
    const double ll = exact_log_likelihood(p, d.obs);
    const std::vector<Mat> le = log_emission_tables(p, d.obs);

    VariationalState mf = initial_variational_state(p, d.obs);
    for (int s = 0; s < 5; ++s) mf_sweep(p, le, mf);
    CHECK(elbo_mf(p, d.obs, mf) <= ll + 1e-8);

    VariationalState sv = initial_structured_state(p, d.obs);
    for (int s = 0; s < 5; ++s) svi_update(p, le, sv);
    CHECK(elbo_structured(p, d.obs, sv) <= ll + 1e-8);
  }
}

TEST_CASE("mean-field sweeps do not decrease the ELBO") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams p = oracle::random_params(rng, {2, 2, 2});
    const Dataset d = sample_ihmp(p, 60, 40 + trial);
    const std::vector<Mat> le = log_emission_tables(p, d.obs);
    VariationalState vs = initial_variational_state(p, d.obs);
    mf_sweep(p, le, vs);
    double prev = elbo_mf(p, d.obs, vs);
    for (int s = 0; s < 8; ++s) {
      mf_sweep(p, le, vs);
      const double cur = elbo_mf(p, d.obs, vs);
      CHECK(cur >= prev - 1e-8 * std::abs(prev));
      prev = cur;
    }
  }
}

TEST_CASE("structured updates do not decrease the ELBO") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams p = oracle::random_params(rng, {2, 3});
    const Dataset d = sample_ihmp(p, 60, 70 + trial);
    const std::vector<Mat> le = log_emission_tables(p, d.obs);
    VariationalState vs = initial_structured_state(p, d.obs);
    double prev = elbo_structured(p, d.obs, vs);
    for (int s = 0; s < 8; ++s) {
      svi_update(p, le, vs);
      const double cur = elbo_structured(p, d.obs, vs);
      CHECK(cur >= prev - 1e-8 * std::abs(prev));
      prev = cur;
    }
  }
}

TEST_CASE("with one chain the structured posterior is exact") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const ModelParams p = oracle::random_params(rng, {3});
    const Dataset d = sample_ihmp(p, 50, trial);
    const std::vector<Mat> le = log_emission_tables(p, d.obs);
    VariationalState vs = initial_structured_state(p, d.obs);
    svi_update(p, le, vs);
    const ExactPosterior ep = exact_posterior(p, d.obs);
    CHECK(elbo_structured(p, d.obs, vs) == doctest::Approx(ep.log_likelihood).epsilon(1e-9));
    CHECK((vs.theta[0] - ep.state_marginals[0]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("variational marginals are distributions") {
  const ModelParams p = table1_params(false, 0.2);
  const Dataset d = sample_ihmp(p, 120, 8);
  const std::vector<Mat> le = log_emission_tables(p, d.obs);
  VariationalState vs = initial_structured_state(p, d.obs);
  svi_update(p, le, vs);
  CHECK((vs.phi.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
  for (const Mat& th : vs.theta) {
    CHECK((th.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(th.minCoeff() >= 0.0);
  }
}

TEST_CASE("fitted ELBO traces are non-decreasing") {
  ScenarioConfig c;
  c.length = 400;
  c.seed = 5;
  const Dataset d = make_scenario(c);
  FitOptions opt;
  opt.max_iter = 30;
  opt.tol = 0.0;
  const InferenceResult mf = mfvi_fit(d.obs, {2, 2, 2}, opt);
  const InferenceResult sv = svi_fit(d.obs, {2, 2, 2}, opt);
  CHECK(non_decreasing(mf.objective_trace, 1e-6));
  CHECK(non_decreasing(sv.objective_trace, 1e-6));
  CHECK(sv.objective_trace.back() <= exact_log_likelihood(sv.params, d.obs) + 1e-6);
}

TEST_CASE("structured VI separates the disjoint scenario") {
  ScenarioConfig c;
  c.length = 900;
  c.seed = 19;
  const Dataset d = make_scenario(c);
  const InferenceResult r = svi_fit(d.obs, {2, 2, 2});
  CHECK(accuracy(r.decoded_source, d.truth.switch_labels, 3) >= 0.95);
  CHECK(r.decoded_states.size() == 3);
  CHECK(static_cast<int>(r.decoded_source.size()) == 900);
}

TEST_CASE("restarts keep the best final objective") {
  const Dataset d = sample_ihmp(table1_params(false, 0.3), 300, 13);
  FitOptions one;
  one.max_iter = 20;
  FitOptions many = one;
  many.restarts = 3;
  const InferenceResult a = svi_fit(d.obs, {2, 2, 2}, one);
  const InferenceResult b = svi_fit(d.obs, {2, 2, 2}, many);
  CHECK(b.objective_trace.back() >= a.objective_trace.back() - 1e-9);
  many.restarts = 0;
  CHECK_THROWS_AS(svi_fit(d.obs, {2, 2, 2}, many), Error);
}

TEST_CASE("dispatch by algorithm name") {
  CHECK(algorithm_from_string("svi") == Algorithm::kSvi);
  CHECK(to_string(Algorithm::kMfvi) == "mfvi");
  CHECK_THROWS_AS(algorithm_from_string("xyz"), Error);
}
