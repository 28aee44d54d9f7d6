#include "ihmp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "ihmp/error_bound.hpp"
#include "ihmp/eval.hpp"

namespace ihmp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// One grid point: data generator, per-method metrics, summary rows.
struct Cell {
  std::string preset, group, x_name;
  double x = 0.0;
  std::function<Dataset(std::uint64_t)> make;
  std::vector<int> state_counts;
  bool want_mse = false;
  bool want_time = false;
};

void run_cell(const Cell& cell, const std::vector<std::string>& methods,
              const ExperimentOptions& opt, ExperimentReport& report) {
  for (const std::string& method : methods) {
    const auto run = [&](std::uint64_t seed) {
      const Dataset d = cell.make(seed);
      const MethodOutcome out =
          run_method(method, d.obs, cell.state_counts, opt.method, mix_seed(seed ^ 0xf17ULL));
      TrialMetrics tm;
      tm["accuracy"] = padded_accuracy(out.labels, d.truth.switch_labels);
      tm["converged"] = out.converged ? 1.0 : 0.0;
      if (cell.want_time && out.iterations > 0)
        tm["seconds_per_iter"] = out.seconds / out.iterations;
      if (cell.want_mse && out.params && d.has_params &&
          out.num_labels == static_cast<int>(cell.state_counts.size())) {
        const std::vector<int> chains = matching_permutation(
            out.labels, d.truth.switch_labels, out.num_labels);
        tm["mse"] = mse_means(*out.params, d.params, chains).mse;
      }
      return tm;
    };
    auto emit = [&](const std::string& stat, double v) {
      report.rows.push_back({cell.preset, cell.group, cell.x_name, cell.x, method, stat, v});
    };
    try {
      const MonteCarloSummary s = monte_carlo(run, trial_seeds(opt.seed, opt.trials), opt.jobs);
      for (const auto& [name, m] : s.metrics) {
        if (name == "converged") {
          emit("converged_rate", m.mean);
          continue;
        }
        emit(name + "_mean", m.mean);
        emit(name + "_std", m.std);
      }
      emit("trials", static_cast<double>(s.trials.size()));
      emit("failures", s.failures);
      for (const std::string& msg : s.failure_messages)
        report.warnings.push_back(cell.preset + " " + cell.x_name + "=" + fmt(cell.x) + " " +
                                  method + ": " + msg);
    } catch (const std::exception& e) {
      emit("failures", opt.trials);
      report.warnings.push_back(cell.preset + " " + cell.x_name + "=" + fmt(cell.x) + " " +
                                method + ": " + e.what());
    }
  }
}

std::vector<std::string> pick(const ExperimentOptions& opt, std::vector<std::string> dflt) {
  return opt.algorithms.empty() ? dflt : opt.algorithms;
}

std::vector<double> grid_or(const ExperimentOptions& opt, std::vector<double> dflt) {
  return opt.grid.empty() ? dflt : opt.grid;
}

ScenarioConfig base_config(const ExperimentOptions& opt, ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  c.length = opt.length;
  c.sd = opt.sd;
  c.missing_ratio = opt.missing_ratio;
  c.radar_alpha = opt.alpha;
  c.radar_jitter_var = opt.jitter_var;
  c.qn = opt.qn;
  return c;
}

std::function<Dataset(std::uint64_t)> maker(ScenarioConfig c) {
  c.check();
  return [c](std::uint64_t seed) {
    ScenarioConfig s = c;
    s.seed = seed;
    return make_scenario(s);
  };
}

void fig4(const ExperimentOptions& opt, ExperimentReport& rep) {
  const std::vector<double> grid = grid_or(opt, arange(0.0, 0.5, 0.1));
  BoundComparisonOptions bo;
  bo.trials = opt.trials;
  bo.length = opt.length;
  bo.seed = opt.seed;
  bo.jobs = opt.jobs;
  bo.fit = opt.method.fit;
  for (int sc = 1; sc <= 3; ++sc) {
    const std::string group = "scenario" + std::to_string(sc);
    for (const std::string& a : pick(opt, {"em", "mfvi", "svi"})) {
      const std::vector<BoundRow> rows = compare_to_bound(algorithm_from_string(a), sc, grid, bo);
      for (const BoundRow& r : rows) {
        auto emit = [&](const std::string& stat, double v) {
          rep.rows.push_back({"fig4", group, "sd", r.sd, a, stat, v});
        };
        emit("error_mean", r.mean_error);
        emit("error_std", r.std_error);
        emit("bound", r.bound);
        emit("converged_rate", r.converged_rate);
        emit("trials", r.trials);
        emit("failures", r.failures);
        if (r.failures > 0)
          rep.warnings.push_back("fig4 " + group + " sd=" + fmt(r.sd) + " " + a + ": " +
                                 std::to_string(r.failures) + " failed trials");
      }
    }
  }
}

void sd_sweep(const std::string& preset, bool mse, const std::vector<std::string>& dflt,
              const ExperimentOptions& opt, ExperimentReport& rep) {
  const std::vector<double> grid = grid_or(opt, arange(0.0, 1.5, 0.1));
  for (const bool disjoint : {true, false}) {
    for (double sd : grid) {
      ScenarioConfig c = base_config(
          opt, disjoint ? ScenarioKind::kTable1Disjoint : ScenarioKind::kTable1NonDisjoint);
      c.sd = sd;
      Cell cell{preset, disjoint ? "disjoint" : "nondisjoint", "sd", sd, maker(c), {2, 2, 2}};
      cell.want_mse = mse;
      run_cell(cell, pick(opt, dflt), opt, rep);
    }
  }
}

void fig7(const ExperimentOptions& opt, ExperimentReport& rep) {
  for (double ratio : grid_or(opt, arange(0.0, 0.56, 0.08))) {
    ScenarioConfig c = base_config(opt, ScenarioKind::kTable1Disjoint);
    c.missing_ratio = ratio;
    Cell cell{"fig7", "disjoint", "missing_ratio", ratio, maker(c), {2, 2, 2}};
    run_cell(cell, pick(opt, {"em", "mfvi", "svi", "ga"}), opt, rep);
  }
}

void fig8a(const ExperimentOptions& opt, ExperimentReport& rep) {
  for (double alpha : grid_or(opt, arange(0.0, 20.0, 2.0))) {
    ScenarioConfig c = base_config(opt, ScenarioKind::kRadar);
    c.radar_alpha = alpha;
    Cell cell{"fig8a", "jitter_var=" + fmt(opt.jitter_var), "alpha", alpha, maker(c), {2, 2}};
    run_cell(cell, pick(opt, {"svi", "em"}), opt, rep);
  }
}

void fig8b(const ExperimentOptions& opt, ExperimentReport& rep) {
  const std::vector<double> jitters = {0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8};
  for (double jv : jitters)
    for (double alpha : grid_or(opt, arange(0.0, 200.0, 10.0))) {
      ScenarioConfig c = base_config(opt, ScenarioKind::kRadar);
      c.radar_alpha = alpha;
      c.radar_jitter_var = jv;
      Cell cell{"fig8b", "jitter_var=" + fmt(jv), "alpha", alpha, maker(c), {2, 2}};
      run_cell(cell, pick(opt, {"svi"}), opt, rep);
    }
}

void fig9(const ExperimentOptions& opt, ExperimentReport& rep) {
  for (double q : grid_or(opt, {2, 5, 10, 15, 20, 25, 30})) {
    const int qn = static_cast<int>(q);
    ScenarioConfig c = base_config(opt, ScenarioKind::kQuantizedStreams);
    c.qn = qn;
    Cell cell{"fig9", "walk_skip", "qn", q, maker(c), {qn, qn}};
    cell.want_time = true;
    run_cell(cell, pick(opt, {"em", "mfvi", "svi"}), opt, rep);
  }
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"em", "mfvi", "svi", "gmm", "hmm", "ga"};
  return names;
}

MethodOutcome run_method(const std::string& method, const ObservationSequence& obs,
                         const std::vector<int>& K, const MethodOptions& opt,
                         std::uint64_t seed) {
  const int M = static_cast<int>(K.size());
  require(M >= 1, "need at least one source");
  MethodOutcome out;
  out.method = method;
  out.num_labels = M;
  const auto t0 = Clock::now();
  if (method == "em" || method == "exact" || method == "mfvi" || method == "svi") {
    FitOptions fo = opt.fit;
    fo.seed = seed;
    InferenceResult r = fit(algorithm_from_string(method), obs, K, fo);
    out.labels = std::move(r.decoded_source);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.params = std::move(r.params);
    out.trace = std::move(r.objective_trace);
  } else if (method == "gmm") {
    GmmResult r = gmm_fit(obs.values, M, seed, opt.baseline_max_iter);
    out.labels = std::move(r.labels);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.trace = std::move(r.log_likelihood_trace);
  } else if (method == "hmm") {
    HmmResult r = hmm_fit(obs.values, M, seed, opt.baseline_max_iter);
    out.labels = std::move(r.labels);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.trace = std::move(r.log_likelihood_trace);
  } else if (method == "ga") {
    GaOptions go = opt.ga;
    go.seed = seed;
    int symbols = 0;
    for (int k : K) symbols += k;
    GaLabeling r = ga_label(obs.values, symbols, go);
    out.labels = std::move(r.labels);
    out.num_labels = *std::max_element(r.search.best.begin(), r.search.best.end()) + 1;
    out.converged = r.search.converged;
    out.iterations = static_cast<int>(r.search.cost_trace.size());
    out.trace = std::move(r.search.cost_trace);
  } else {
    fail(ErrorKind::kInvalidArgument, "unknown method '" + method +
                                          "' (expected em, mfvi, svi, gmm, hmm or ga)");
  }
  out.seconds = seconds_since(t0);
  return out;
}

double padded_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  require(pred.size() == truth.size(), "label sequences differ in length");
  if (pred.empty()) return 1.0;
  int n = 0;
  for (int v : pred) n = std::max(n, v + 1);
  for (int v : truth) n = std::max(n, v + 1);
  return accuracy(pred, truth, n);
}

const std::vector<std::string>& experiment_presets() {
  static const std::vector<std::string> names = {"fig4",  "fig5",  "fig6", "fig7",
                                                 "fig8a", "fig8b", "fig9"};
  return names;
}

ExperimentReport run_experiment(const std::string& preset, const ExperimentOptions& opt) {
  require(opt.trials >= 1, "trials must be >= 1");
  require(opt.length >= 2, "T must be >= 2");
  for (const std::string& a : opt.algorithms)
    require(std::find(method_names().begin(), method_names().end(), a) != method_names().end(),
            "unknown algorithm '" + a + "'");
  ExperimentReport rep;
  if (preset == "fig4") fig4(opt, rep);
  else if (preset == "fig5") sd_sweep("fig5", false, {"em", "mfvi", "svi", "gmm", "hmm", "ga"}, opt, rep);
  else if (preset == "fig6") sd_sweep("fig6", true, {"em", "mfvi", "svi"}, opt, rep);
  else if (preset == "fig7") fig7(opt, rep);
  else if (preset == "fig8a") fig8a(opt, rep);
  else if (preset == "fig8b") fig8b(opt, rep);
  else if (preset == "fig9") fig9(opt, rep);
  else
    fail(ErrorKind::kInvalidArgument,
         "unknown preset '" + preset + "' (expected fig4, fig5, fig6, fig7, fig8a, fig8b or fig9)");
  return rep;
}

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out << "preset,group,x_name,x,algorithm,statistic,value\n";
  for (const ExperimentRow& r : rows)
    out << r.preset << "," << r.group << "," << r.x_name << "," << fmt(r.x) << ","
        << r.algorithm << "," << r.statistic << "," << fmt(r.value) << "\n";
  return out.str();
}

}  // namespace ihmp
