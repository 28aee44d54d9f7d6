#include "ihmp/error_bound.hpp"

#include <algorithm>
#include <cmath>

#include "ihmp/eval.hpp"
#include "ihmp/rng.hpp"
#include "ihmp/simulate.hpp"

namespace ihmp {

namespace {

void check_stochastic(const Mat& a, const std::string& name) {
  require(a.rows() == 2 && a.cols() == 2, name + " must be 2x2");
  require(a.allFinite() && (a.array() >= 0.0).all(), name + " has negative entries");
  for (int i = 0; i < 2; ++i)
    require(std::abs(a.row(i).sum() - 1.0) <= 1e-9,
            "row " + std::to_string(i + 1) + " of " + name + " does not sum to 1");
}

struct Stationary {
  Vec z;
  std::array<Vec, 2> chain;
};

Stationary stationary(const BoundInputs& in) {
  return {stationary_distribution(in.switch_trans),
          {stationary_distribution(in.chain_trans[0]),
           stationary_distribution(in.chain_trans[1])}};
}

// log prior weight of emitting from state k of source y after source x.
double log_weight(const BoundInputs& in, const Stationary& st, int x, int y, int k) {
  const Vec& xi = st.chain[y];
  double c = floored_log(xi(k) * in.switch_trans(x, y));
  for (int j = 0; j < 2; ++j) c += xi(j) * floored_log(in.chain_trans[y](j, k));
  return c;
}

double gamma_impl(const BoundInputs& in, const Stationary& st, int x, int y, int k,
                  int l) {
  const int other = 1 - y;
  const double mk = in.means[y](k);
  const double ml = in.means[other](l);
  const double d = mk - ml;
  if (std::abs(d) < 1e-12)
    fail(ErrorKind::kInvalidArgument, "coinciding means across sources");
  const double s2 = in.sigma * in.sigma;
  return 0.5 * (mk + ml) +
         s2 * (log_weight(in, st, x, other, l) - log_weight(in, st, x, y, k)) / d;
}

}  // namespace

void BoundInputs::check() const {
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
  check_stochastic(switch_trans, "A^z");
  check_stochastic(chain_trans[0], "A^1");
  check_stochastic(chain_trans[1], "A^2");
  for (int y = 0; y < 2; ++y)
    require(means[y].size() == 2 && means[y].allFinite(),
            "each source needs two finite means");
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      require(means[0](k) != means[1](l), "source means must be disjoint");
  stationary(*this);
}

BoundInputs scenario_bound_inputs(int scenario, double sd) {
  const ModelParams p = error_scenario_params(scenario, sd);
  BoundInputs in;
  in.switch_trans = p.switch_trans;
  for (int y = 0; y < 2; ++y) {
    in.chain_trans[y] = p.chain_trans[y];
    in.means[y] = p.means[y].col(0);
  }
  in.sigma = sd;
  return in;
}

double right_tail_Q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double gamma_threshold(const BoundInputs& in, int x, int y, int k, int l) {
  in.check();
  require(x >= 0 && x < 2 && y >= 0 && y < 2 && k >= 0 && k < 2 && l >= 0 && l < 2,
          "gamma_threshold indices must be 0 or 1");
  return gamma_impl(in, stationary(in), x, y, k, l);
}

double error_lower_bound(const BoundInputs& in) {
  in.check();
  const Stationary st = stationary(in);
  double total = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double w = st.z(x) * in.switch_trans(x, y);
      const Vec& xy = st.chain[y];
      const Vec& xo = st.chain[1 - y];
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const double mk = in.means[y](k);
          const double ml = in.means[1 - y](l);
          const double g = gamma_impl(in, st, x, y, k, l);
          const double sign = mk > ml ? -1.0 : 1.0;
          total += w * xy(k) * xo(l) * right_tail_Q(sign * (g - mk) / in.sigma);
        }
    }
  return std::clamp(total, 0.0, 1.0);
}

double optimal_rule_error(const BoundInputs& in, int samples, std::uint64_t seed) {
  in.check();
  require(samples >= 1, "samples must be >= 1");
  const Stationary st = stationary(in);
  Rng rng(seed);
  const double s2 = in.sigma * in.sigma;
  int errors = 0;
  for (int i = 0; i < samples; ++i) {
    const int x = rng.categorical(st.z);
    const int y = rng.categorical(in.switch_trans.row(x).transpose());
    const int k = rng.categorical(st.chain[y]);
    const double p = in.means[y](k) + in.sigma * rng.normal();
    double score[2];
    for (int c = 0; c < 2; ++c) {
      double mix = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double d = p - in.means[c](j);
        mix += st.chain[c](j) * std::exp(-0.5 * d * d / s2);
      }
      score[c] = in.switch_trans(x, c) * mix;
    }
    const int decided = score[1] > score[0] ? 1 : 0;
    errors += decided != y;
  }
  return static_cast<double>(errors) / samples;
}

std::vector<BoundRow> compare_to_bound(Algorithm algorithm, int scenario,
                                       const std::vector<double>& sd_grid,
                                       const BoundComparisonOptions& opt) {
  require(scenario >= 1 && scenario <= 3, "scenario must be 1, 2 or 3");
  require(opt.trials >= 1, "trials must be >= 1");
  std::vector<BoundRow> rows;
  for (double sd : sd_grid) {
    require(sd >= 0.0, "sd must be non-negative");
    BoundRow row;
    row.sd = sd;
    row.bound = sd > 0.0 ? error_lower_bound(scenario_bound_inputs(scenario, sd)) : 0.0;

    const auto run = [&](std::uint64_t seed) {
      ScenarioConfig cfg;
      cfg.kind = ScenarioKind::kErrorScenario;
      cfg.error_scenario = scenario;
      cfg.sd = sd;
      cfg.length = opt.length;
      cfg.seed = seed;
      const Dataset d = make_scenario(cfg);
      FitOptions fo = opt.fit;
      fo.seed = mix_seed(seed ^ 0x5eedULL);
      const InferenceResult r = fit(algorithm, d.obs, {2, 2}, fo);
      return TrialMetrics{
          {"error", 1.0 - accuracy(r.decoded_source, d.truth.switch_labels, 2)},
          {"converged", r.converged ? 1.0 : 0.0}};
    };
    try {
      const MonteCarloSummary s =
          monte_carlo(run, trial_seeds(opt.seed, opt.trials), opt.jobs);
      row.mean_error = s.metrics.at("error").mean;
      row.std_error = s.metrics.at("error").std;
      row.converged_rate = s.metrics.at("converged").mean;
      row.trials = static_cast<int>(s.trials.size());
      row.failures = s.failures;
    } catch (const Error&) {
      row.mean_error = std::nan("");
      row.failures = opt.trials;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ihmp
