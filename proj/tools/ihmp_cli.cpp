// ihmp command-line tool. Talks to the library only through ihmp.h.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ihmp/ihmp.h"

namespace {

enum ExitCode {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
  kExitResourceCap = 4,
  kExitMaxIter = 5,
};

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(ihmp_status s) {
  switch (s) {
    case IHMP_OK: return kExitOk;
    case IHMP_ERR_INVALID_ARGUMENT:
    case IHMP_ERR_PARSE:
    case IHMP_ERR_IO: return kExitUsage;
    case IHMP_ERR_NUMERICAL: return kExitNumerical;
    case IHMP_ERR_RESOURCE_CAP: return kExitResourceCap;
    case IHMP_ERR_INTERNAL: return kExitInternal;
  }
  return kExitInternal;
}

void check(ihmp_status s) {
  if (s != IHMP_OK) throw Failure{exit_code_for(s), ihmp_last_error()};
}

// Owning wrappers around the opaque handles.
template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Scenario = Handle<ihmp_scenario, ihmp_scenario_destroy>;
using Dataset = Handle<ihmp_dataset, ihmp_dataset_destroy>;
using Options = Handle<ihmp_options, ihmp_options_destroy>;
using Result = Handle<ihmp_result, ihmp_result_destroy>;

std::string take(char* s) {
  std::string out = s ? s : "";
  ihmp_string_free(s);
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      out.push_back(k);
    } catch (const std::exception&) {
      throw Failure{kExitUsage, "--states expects a comma list of positive integers, got '" +
                                    text + "'"};
    }
  }
  if (out.empty()) throw Failure{kExitUsage, "--states is empty"};
  return out;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Failure{kExitUsage, "cannot write '" + path + "'"};
  out << text;
}

// Options shared by fit and experiment; unset flags leave config values alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter, restarts, jobs;
  std::optional<double> tol, beta;

  void add(CLI::App* app) {
    app->add_option("--config", config, "key = value options file (flags win)");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--max-iter", max_iter, "iteration limit")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "relative objective tolerance")->check(CLI::NonNegativeNumber);
    app->add_option("--restarts", restarts, "independent initializations (best kept)")
        ->check(CLI::PositiveNumber);
    app->add_option("--beta", beta, "IMP penalty weight for ga")->check(CLI::NonNegativeNumber);
    app->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  void apply(ihmp_options* o) const {
    if (!config.empty()) check(ihmp_options_load(o, config.c_str()));
    auto set = [&](const char* key, const std::string& v) { check(ihmp_options_set(o, key, v.c_str())); };
    if (seed) set("seed", std::to_string(*seed));
    if (max_iter) set("max_iter", std::to_string(*max_iter));
    if (restarts) set("restarts", std::to_string(*restarts));
    if (jobs) set("jobs", std::to_string(*jobs));
    if (tol) set("tol", num(*tol));
    if (beta) set("beta", num(*beta));
  }
};

int cmd_simulate(const std::string& config, const std::vector<std::pair<std::string, std::string>>& flags,
                 const std::string& output) {
  Scenario s;
  check(ihmp_scenario_create(s.out()));
  if (!config.empty()) check(ihmp_scenario_load(s.get(), config.c_str()));
  for (const auto& [k, v] : flags) check(ihmp_scenario_set(s.get(), k.c_str(), v.c_str()));
  Dataset d;
  check(ihmp_simulate(s.get(), d.out()));
  check(ihmp_dataset_write(d.get(), output.c_str()));
  int T = 0, D = 0;
  check(ihmp_dataset_shape(d.get(), &T, &D));
  std::cerr << "wrote " << output << " (T=" << T << ", D=" << D << ") and " << output
            << ".meta.json\n";
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& method, const std::string& states,
            const CommonFlags& common, const std::string& init, const std::string& prefix) {
  const std::vector<int> K = parse_counts(states);
  Dataset d;
  check(ihmp_dataset_read(data_path.c_str(), d.out()));
  Options o;
  check(ihmp_options_create(o.out()));
  common.apply(o.get());
  if (!init.empty()) check(ihmp_options_set(o.get(), "init", init.c_str()));

  Result r;
  check(ihmp_fit(d.get(), method.c_str(), K.data(), static_cast<int>(K.size()), o.get(), r.out()));
  check(ihmp_result_write(r.get(), prefix.c_str()));

  int converged = 0, iterations = 0, has_labels = 0;
  check(ihmp_result_converged(r.get(), &converged));
  check(ihmp_result_iterations(r.get(), &iterations));
  check(ihmp_dataset_has_labels(d.get(), &has_labels));
  std::cout << "method: " << method << "\n"
            << "iterations: " << iterations << "\n"
            << "converged: " << (converged ? "yes" : "no") << "\n";
  int n = 0;
  check(ihmp_result_trace_length(r.get(), &n));
  if (n > 0) {
    std::vector<double> trace(n);
    check(ihmp_result_trace(r.get(), trace.data(), trace.size()));
    std::cout << "final objective: " << num(trace.back()) << "\n";
  }
  if (has_labels) {
    double acc = 0.0;
    check(ihmp_result_accuracy(r.get(), d.get(), &acc));
    std::cout << "accuracy: " << num(acc) << "\n";
    double mse = 0.0;
    if (ihmp_result_mse(r.get(), d.get(), &mse) == IHMP_OK) std::cout << "mean mse: " << num(mse) << "\n";
  }
  std::cout << "outputs: " << prefix << ".json " << prefix << ".labels.csv " << prefix
            << ".trace.csv\n";
  if (!converged) {
    std::cerr << "stopped at the iteration limit before converging\n";
    return kExitMaxIter;
  }
  return kExitOk;
}

int cmd_experiment(const std::string& preset, const CommonFlags& common,
                   const std::vector<std::pair<std::string, std::string>>& flags,
                   const std::string& output) {
  Options o;
  check(ihmp_options_create(o.out()));
  common.apply(o.get());
  for (const auto& [k, v] : flags) check(ihmp_options_set(o.get(), k.c_str(), v.c_str()));
  char* csv = nullptr;
  char* warnings = nullptr;
  check(ihmp_experiment(preset.c_str(), o.get(), &csv, &warnings));
  const std::string text = take(csv);
  const std::string warn = take(warnings);
  write_or_print(output, text);
  if (!warn.empty()) std::cerr << "warning: some trials failed:\n" << warn;
  return kExitOk;
}

int cmd_ingest(const std::string& a, const std::string& b, int qn, std::uint64_t seed,
               const std::string& output) {
  Dataset d;
  check(ihmp_dataset_from_motion(a.c_str(), b.c_str(), qn, seed, d.out()));
  check(ihmp_dataset_write(d.get(), output.c_str()));
  int T = 0;
  check(ihmp_dataset_shape(d.get(), &T, nullptr));
  std::cerr << "wrote " << output << " (T=" << T << ")\n";
  return kExitOk;
}

int cmd_bound(int scenario, const std::vector<double>& sds) {
  std::cout << "scenario,sd,bound\n";
  for (double sd : sds) {
    double b = 0.0;
    check(ihmp_error_bound(scenario, sd, &b));
    std::cout << scenario << "," << num(sd) << "," << num(b) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De-interleaving of interleaved hidden Markov processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ihmp_version()));

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_config, sim_output;
  std::optional<std::string> sim_kind;
  std::optional<int> sim_T, sim_err, sim_qn;
  std::optional<double> sim_sd, sim_missing, sim_alpha, sim_jitter, sim_stay;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "scenario file (key = value)");
  sim->add_option("--kind", sim_kind,
                  "table1_disjoint|table1_nondisjoint|error_scenario|radar|quantized_streams");
  sim->add_option("-T,--length", sim_T, "number of observations");
  sim->add_option("--sd", sim_sd, "emission standard deviation");
  sim->add_option("--missing", sim_missing, "missing-observation ratio in [0, 1)");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--error-scenario", sim_err, "1, 2 or 3");
  sim->add_option("--alpha", sim_alpha, "radar phase overlap (us)");
  sim->add_option("--jitter-var", sim_jitter, "radar PRI jitter variance (us^2)");
  sim->add_option("--qn", sim_qn, "quantization levels");
  sim->add_option("--stay", sim_stay, "diagonal of the preset transition matrices");
  sim->add_option("-o,--output", sim_output, "dataset CSV path")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "de-interleave a dataset");
  std::string fit_data, fit_method = "svi", fit_states, fit_init, fit_prefix;
  CommonFlags fit_common;
  fit->add_option("dataset", fit_data, "dataset CSV")->required();
  fit->add_option("-a,--algorithm", fit_method, "em|mfvi|svi|gmm|hmm|ga");
  fit->add_option("-K,--states", fit_states, "states per chain, e.g. 2,2,2")->required();
  fit->add_option("--init", fit_init, "initial parameter JSON");
  fit->add_option("-o,--output", fit_prefix, "output prefix")->required();
  fit_common.add(fit);

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a Monte-Carlo experiment preset");
  std::string exp_preset, exp_output;
  CommonFlags exp_common;
  std::optional<int> exp_trials, exp_T, exp_qn;
  std::optional<double> exp_sd, exp_missing, exp_alpha, exp_jitter;
  std::optional<std::string> exp_algorithms, exp_grid;
  exp->add_option("preset", exp_preset, "fig4|fig5|fig6|fig7|fig8a|fig8b|fig9")->required();
  exp->add_option("--trials", exp_trials, "trials per grid point (default 20)")
      ->check(CLI::PositiveNumber);
  exp->add_option("-T,--length", exp_T, "observations per trial");
  exp->add_option("--algorithm", exp_algorithms, "comma list overriding the preset methods");
  exp->add_option("--grid", exp_grid, "comma list overriding the preset x grid");
  exp->add_option("--sd", exp_sd, "fixed sd where sd is not swept");
  exp->add_option("--missing", exp_missing, "missing ratio where it is not swept");
  exp->add_option("--alpha", exp_alpha, "radar overlap where it is not swept");
  exp->add_option("--jitter-var", exp_jitter, "radar jitter variance for fig8a");
  exp->add_option("--qn", exp_qn, "quantization levels where QN is not swept");
  exp->add_option("-o,--output", exp_output, "CSV path (default stdout)");
  exp_common.add(exp);

  // ingest-motion
  auto* ing = app.add_subcommand("ingest-motion", "interleave two 3-axis recordings");
  std::string ing_a, ing_b, ing_output;
  int ing_qn = 2;
  std::uint64_t ing_seed = 1;
  ing->add_option("first", ing_a, "first recording (x,y,z per row)")->required();
  ing->add_option("second", ing_b, "second recording")->required();
  ing->add_option("--qn", ing_qn, "quantization levels")->check(CLI::Range(2, 1000));
  ing->add_option("--seed", ing_seed, "interleaving seed");
  ing->add_option("-o,--output", ing_output, "dataset CSV path")->required();

  // bound
  auto* bnd = app.add_subcommand("bound", "error lower bound for the two-source scenarios");
  int bnd_scenario = 1;
  std::vector<double> bnd_sd = {0.1, 0.2, 0.3, 0.4, 0.5};
  bnd->add_option("--scenario", bnd_scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
  bnd->add_option("--sd", bnd_sd, "standard deviations")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) {
      std::vector<std::pair<std::string, std::string>> flags;
      if (sim_kind) flags.emplace_back("kind", *sim_kind);
      if (sim_T) flags.emplace_back("T", std::to_string(*sim_T));
      if (sim_sd) flags.emplace_back("sd", num(*sim_sd));
      if (sim_missing) flags.emplace_back("missing_ratio", num(*sim_missing));
      if (sim_seed) flags.emplace_back("seed", std::to_string(*sim_seed));
      if (sim_err) flags.emplace_back("error_scenario", std::to_string(*sim_err));
      if (sim_alpha) flags.emplace_back("alpha", num(*sim_alpha));
      if (sim_jitter) flags.emplace_back("jitter_var", num(*sim_jitter));
      if (sim_qn) flags.emplace_back("qn", std::to_string(*sim_qn));
      if (sim_stay) flags.emplace_back("stay", num(*sim_stay));
      return cmd_simulate(sim_config, flags, sim_output);
    }
    if (*fit) return cmd_fit(fit_data, fit_method, fit_states, fit_common, fit_init, fit_prefix);
    if (*exp) {
      std::vector<std::pair<std::string, std::string>> flags;
      if (exp_trials) flags.emplace_back("trials", std::to_string(*exp_trials));
      if (exp_T) flags.emplace_back("T", std::to_string(*exp_T));
      if (exp_sd) flags.emplace_back("sd", num(*exp_sd));
      if (exp_missing) flags.emplace_back("missing_ratio", num(*exp_missing));
      if (exp_alpha) flags.emplace_back("alpha", num(*exp_alpha));
      if (exp_jitter) flags.emplace_back("jitter_var", num(*exp_jitter));
      if (exp_qn) flags.emplace_back("qn", std::to_string(*exp_qn));
      if (exp_algorithms) flags.emplace_back("algorithms", *exp_algorithms);
      if (exp_grid) flags.emplace_back("grid", *exp_grid);
      return cmd_experiment(exp_preset, exp_common, flags, exp_output);
    }
    if (*ing) return cmd_ingest(ing_a, ing_b, ing_qn, ing_seed, ing_output);
    if (*bnd) return cmd_bound(bnd_scenario, bnd_sd);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return kExitUsage;
}
