#include "ihmp/ihmp.h"

#include <charconv>
#include <chrono>
#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "ihmp/error_bound.hpp"
#include "ihmp/eval.hpp"
#include "ihmp/experiments.hpp"
#include "ihmp/io.hpp"
#include "json.hpp"

using namespace ihmp;

struct ihmp_scenario {
  ScenarioConfig config;
};

struct ihmp_dataset {
  Dataset data;
  std::string meta;
};

struct ihmp_options {
  ExperimentOptions exp;
};

struct ihmp_result {
  MethodOutcome outcome;
  std::optional<InferenceResult> full;  // em / mfvi / svi
  std::vector<int> state_counts;
  double best_cost = 0.0;               // ga
  std::vector<int> partition;           // ga
};

namespace {

thread_local std::string g_last_error;

ihmp_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument: return IHMP_ERR_INVALID_ARGUMENT;
    case ErrorKind::kNumerical: return IHMP_ERR_NUMERICAL;
    case ErrorKind::kResourceCap: return IHMP_ERR_RESOURCE_CAP;
    case ErrorKind::kIo: return IHMP_ERR_IO;
    case ErrorKind::kParse: return IHMP_ERR_PARSE;
  }
  return IHMP_ERR_INTERNAL;
}

template <typename F>
ihmp_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return IHMP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IHMP_ERR_RESOURCE_CAP;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IHMP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorKind::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), d);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    fail(ErrorKind::kParse, "option '" + key + "' needs a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  long long i = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), i);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    fail(ErrorKind::kParse, "option '" + key + "' needs an integer, got '" + v + "'");
  return i;
}

std::vector<std::string> comma_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void set_option(ExperimentOptions& e, const std::string& key, const std::string& v) {
  FitOptions& f = e.method.fit;
  GaOptions& g = e.method.ga;
  if (key == "max_iter") {
    f.max_iter = static_cast<int>(to_int(key, v));
    e.method.baseline_max_iter = f.max_iter;
  } else if (key == "tol") f.tol = to_double(key, v);
  else if (key == "seed") {
    const long long s = to_int(key, v);
    require(s >= 0, "seed must be non-negative");
    f.seed = g.seed = e.seed = static_cast<std::uint64_t>(s);
  } else if (key == "restarts") f.restarts = static_cast<int>(to_int(key, v));
  else if (key == "damping") f.damping = to_double(key, v);
  else if (key == "inner_sweeps") f.inner_sweeps = static_cast<int>(to_int(key, v));
  else if (key == "anneal_iters") f.anneal_iters = static_cast<int>(to_int(key, v));
  else if (key == "state_cap") f.state_cap = static_cast<std::size_t>(to_int(key, v));
  else if (key == "cov_floor") f.cov_floor_rel = to_double(key, v);
  else if (key == "init") f.init = params_from_json(read_text(v));
  else if (key == "init_strategy") {
    if (v == "auto") f.init_strategy = InitStrategy::kAuto;
    else if (v == "codebook") f.init_strategy = InitStrategy::kCodebook;
    else if (v == "shared") f.init_strategy = InitStrategy::kSharedCodebook;
    else if (v == "random") f.init_strategy = InitStrategy::kRandom;
    else fail(ErrorKind::kInvalidArgument, "init_strategy must be auto, codebook, shared or random");
  }
  else if (key == "beta") g.beta = to_double(key, v);
  else if (key == "population") g.population = static_cast<int>(to_int(key, v));
  else if (key == "generations") g.generations = static_cast<int>(to_int(key, v));
  else if (key == "mutation_rate") g.mutation_rate = to_double(key, v);
  else if (key == "crossover") g.crossover = to_int(key, v) != 0;
  else if (key == "trials") e.trials = static_cast<int>(to_int(key, v));
  else if (key == "jobs") e.jobs = g.jobs = static_cast<int>(to_int(key, v));
  else if (key == "T") e.length = static_cast<int>(to_int(key, v));
  else if (key == "sd") e.sd = to_double(key, v);
  else if (key == "missing_ratio") e.missing_ratio = to_double(key, v);
  else if (key == "alpha") e.alpha = to_double(key, v);
  else if (key == "jitter_var") e.jitter_var = to_double(key, v);
  else if (key == "qn") e.qn = static_cast<int>(to_int(key, v));
  else if (key == "algorithms") e.algorithms = comma_list(v);
  else if (key == "grid") {
    e.grid.clear();
    for (const std::string& x : comma_list(v)) e.grid.push_back(to_double(key, x));
  } else
    fail(ErrorKind::kInvalidArgument, "unknown option '" + key + "'");
}

std::string baseline_json(const ihmp_result& r) {
  nlohmann::json j;
  j["algorithm"] = r.outcome.method;
  j["iterations"] = r.outcome.iterations;
  j["converged"] = r.outcome.converged;
  j["num_labels"] = r.outcome.num_labels;
  j["decoded_source"] = r.outcome.labels;
  j[r.outcome.method == "ga" ? "cost_trace" : "objective_trace"] = r.outcome.trace;
  if (r.outcome.method == "ga") {
    j["partition"] = r.partition;
    j["best_cost"] = r.best_cost;
  }
  j["version"] = version();
  return j.dump(2);
}

}  // namespace

extern "C" {

const char* ihmp_version(void) { return version(); }

const char* ihmp_last_error(void) { return g_last_error.c_str(); }

const char* ihmp_status_name(ihmp_status s) {
  switch (s) {
    case IHMP_OK: return "ok";
    case IHMP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IHMP_ERR_NUMERICAL: return "numerical failure";
    case IHMP_ERR_RESOURCE_CAP: return "resource cap exceeded";
    case IHMP_ERR_IO: return "i/o error";
    case IHMP_ERR_PARSE: return "parse error";
    case IHMP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ihmp_string_free(char* s) { std::free(s); }

ihmp_status ihmp_scenario_create(ihmp_scenario** out) {
  return guard([&] {
    need(out, "out");
    *out = new ihmp_scenario{};
  });
}

void ihmp_scenario_destroy(ihmp_scenario* s) { delete s; }

ihmp_status ihmp_scenario_load(ihmp_scenario* s, const char* path) {
  return guard([&] {
    need(s, "scenario");
    need(path, "path");
    s->config = scenario_from_config(read_config(path), path, s->config);
  });
}

ihmp_status ihmp_scenario_set(ihmp_scenario* s, const char* key, const char* value) {
  return guard([&] {
    need(s, "scenario");
    need(key, "key");
    need(value, "value");
    Config cfg;
    cfg[key] = {value, 0};
    s->config = scenario_from_config(cfg, "scenario", s->config);
  });
}

ihmp_status ihmp_scenario_to_json(const ihmp_scenario* s, char** json) {
  return guard([&] {
    need(s, "scenario");
    need(json, "json");
    *json = dup(scenario_to_json(s->config));
  });
}

ihmp_status ihmp_simulate(const ihmp_scenario* s, ihmp_dataset** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    auto d = std::make_unique<ihmp_dataset>();
    d->data = make_scenario(s->config);
    d->meta = dataset_meta_json(s->config, d->data);
    *out = d.release();
  });
}

ihmp_status ihmp_dataset_create(const double* values, int T, int D, const int* labels,
                                ihmp_dataset** out) {
  return guard([&] {
    need(values, "values");
    need(out, "out");
    require(T >= 1 && D >= 1, "dataset needs T >= 1 and D >= 1");
    auto d = std::make_unique<ihmp_dataset>();
    d->data.obs.values =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            values, T, D);
    require(d->data.obs.values.allFinite(), "observations must be finite");
    if (labels) {
      d->data.truth.switch_labels.assign(labels, labels + T);
      for (int v : d->data.truth.switch_labels) require(v >= 0, "labels must be non-negative");
    }
    *out = d.release();
  });
}

ihmp_status ihmp_dataset_read(const char* path, ihmp_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto d = std::make_unique<ihmp_dataset>();
    d->data = read_dataset(path);
    try {
      d->meta = read_text(std::string(path) + ".meta.json");
    } catch (const Error&) {
      d->meta.clear();
    }
    *out = d.release();
  });
}

ihmp_status ihmp_dataset_write(const ihmp_dataset* d, const char* path) {
  return guard([&] {
    need(d, "dataset");
    need(path, "path");
    std::string meta = d->meta;
    if (meta.empty()) {
      nlohmann::json j;
      j["version"] = version();
      j["T"] = d->data.obs.length();
      j["D"] = d->data.obs.dim();
      meta = j.dump(2);
    }
    write_dataset(path, d->data, meta);
  });
}

ihmp_status ihmp_dataset_from_motion(const char* csv_a, const char* csv_b, int qn,
                                     uint64_t seed, ihmp_dataset** out) {
  return guard([&] {
    need(csv_a, "csv_a");
    need(csv_b, "csv_b");
    need(out, "out");
    const Mat a = read_motion_csv(csv_a);
    const Mat b = read_motion_csv(csv_b);
    QuantizedInterleave q = quantize_and_interleave(a, b, qn, seed);
    auto d = std::make_unique<ihmp_dataset>();
    d->data = std::move(q.data);
    nlohmann::json j;
    j["source"] = "motion";
    j["inputs"] = {csv_a, csv_b};
    j["qn"] = qn;
    j["seed"] = seed;
    j["version"] = version();
    j["T"] = d->data.obs.length();
    j["D"] = d->data.obs.dim();
    nlohmann::json books = nlohmann::json::array();
    for (const Vec& c : q.codebooks) books.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    j["codebooks"] = books;
    d->meta = j.dump(2);
    *out = d.release();
  });
}

void ihmp_dataset_destroy(ihmp_dataset* d) { delete d; }

ihmp_status ihmp_dataset_shape(const ihmp_dataset* d, int* T, int* D) {
  return guard([&] {
    need(d, "dataset");
    if (T) *T = d->data.obs.length();
    if (D) *D = d->data.obs.dim();
  });
}

ihmp_status ihmp_dataset_has_labels(const ihmp_dataset* d, int* has_labels) {
  return guard([&] {
    need(d, "dataset");
    need(has_labels, "has_labels");
    *has_labels = d->data.truth.length() == d->data.obs.length() ? 1 : 0;
  });
}

ihmp_status ihmp_dataset_values(const ihmp_dataset* d, double* buf, size_t len) {
  return guard([&] {
    need(d, "dataset");
    need(buf, "buf");
    const Mat& v = d->data.obs.values;
    require(len >= static_cast<size_t>(v.size()), "buffer too small");
    for (Eigen::Index t = 0; t < v.rows(); ++t)
      for (Eigen::Index k = 0; k < v.cols(); ++k) buf[t * v.cols() + k] = v(t, k);
  });
}

ihmp_status ihmp_dataset_labels(const ihmp_dataset* d, int* buf, size_t len) {
  return guard([&] {
    need(d, "dataset");
    need(buf, "buf");
    const auto& z = d->data.truth.switch_labels;
    require(!z.empty(), "dataset has no labels");
    require(len >= z.size(), "buffer too small");
    std::copy(z.begin(), z.end(), buf);
  });
}

ihmp_status ihmp_options_create(ihmp_options** out) {
  return guard([&] {
    need(out, "out");
    *out = new ihmp_options{};
  });
}

void ihmp_options_destroy(ihmp_options* o) { delete o; }

ihmp_status ihmp_options_set(ihmp_options* o, const char* key, const char* value) {
  return guard([&] {
    need(o, "options");
    need(key, "key");
    need(value, "value");
    set_option(o->exp, key, value);
  });
}

ihmp_status ihmp_options_load(ihmp_options* o, const char* path) {
  return guard([&] {
    need(o, "options");
    need(path, "path");
    for (const auto& [key, entry] : read_config(path)) {
      try {
        set_option(o->exp, key, entry.value);
      } catch (const Error& e) {
        fail(ErrorKind::kParse, std::string(path) + ":" + std::to_string(entry.line) + ": " +
                                    e.what());
      }
    }
  });
}

ihmp_status ihmp_fit(const ihmp_dataset* d, const char* method, const int* state_counts,
                     int num_chains, const ihmp_options* o, ihmp_result** out) {
  return guard([&] {
    need(d, "dataset");
    need(method, "method");
    need(state_counts, "state_counts");
    need(out, "out");
    require(num_chains >= 1, "num_chains must be >= 1");
    const ihmp_options dflt{};
    const ExperimentOptions& e = (o ? *o : dflt).exp;
    auto r = std::make_unique<ihmp_result>();
    r->state_counts.assign(state_counts, state_counts + num_chains);
    for (int k : r->state_counts) require(k >= 1, "state counts must be >= 1");
    const std::string m = method;
    if (m == "em" || m == "exact" || m == "mfvi" || m == "svi") {
      const auto t0 = std::chrono::steady_clock::now();
      InferenceResult full = fit(algorithm_from_string(m), d->data.obs, r->state_counts, e.method.fit);
      r->outcome.method = to_string(full.algorithm);
      r->outcome.labels = full.decoded_source;
      r->outcome.num_labels = num_chains;
      r->outcome.converged = full.converged;
      r->outcome.iterations = full.iterations;
      r->outcome.trace = full.objective_trace;
      r->outcome.params = full.params;
      r->outcome.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r->full = std::move(full);
    } else if (m == "ga") {
      GaOptions go = e.method.ga;
      int symbols = 0;
      for (int k : r->state_counts) symbols += k;
      GaLabeling g = ga_label(d->data.obs.values, symbols, go);
      r->outcome.method = "ga";
      r->outcome.labels = g.labels;
      r->outcome.num_labels = *std::max_element(g.search.best.begin(), g.search.best.end()) + 1;
      r->outcome.converged = g.search.converged;
      r->outcome.iterations = static_cast<int>(g.search.cost_trace.size());
      r->outcome.trace = g.search.cost_trace;
      r->partition = g.search.best;
      r->best_cost = g.search.best_cost;
    } else {
      r->outcome = run_method(m, d->data.obs, r->state_counts, e.method, e.method.fit.seed);
    }
    *out = r.release();
  });
}

void ihmp_result_destroy(ihmp_result* r) { delete r; }

ihmp_status ihmp_result_converged(const ihmp_result* r, int* converged) {
  return guard([&] {
    need(r, "result");
    need(converged, "converged");
    *converged = r->outcome.converged ? 1 : 0;
  });
}

ihmp_status ihmp_result_iterations(const ihmp_result* r, int* iterations) {
  return guard([&] {
    need(r, "result");
    need(iterations, "iterations");
    *iterations = r->outcome.iterations;
  });
}

ihmp_status ihmp_result_num_labels(const ihmp_result* r, int* num_labels) {
  return guard([&] {
    need(r, "result");
    need(num_labels, "num_labels");
    *num_labels = r->outcome.num_labels;
  });
}

ihmp_status ihmp_result_length(const ihmp_result* r, int* T) {
  return guard([&] {
    need(r, "result");
    need(T, "T");
    *T = static_cast<int>(r->outcome.labels.size());
  });
}

ihmp_status ihmp_result_labels(const ihmp_result* r, int* buf, size_t len) {
  return guard([&] {
    need(r, "result");
    need(buf, "buf");
    require(len >= r->outcome.labels.size(), "buffer too small");
    std::copy(r->outcome.labels.begin(), r->outcome.labels.end(), buf);
  });
}

ihmp_status ihmp_result_trace_length(const ihmp_result* r, int* n) {
  return guard([&] {
    need(r, "result");
    need(n, "n");
    *n = static_cast<int>(r->outcome.trace.size());
  });
}

ihmp_status ihmp_result_trace(const ihmp_result* r, double* buf, size_t len) {
  return guard([&] {
    need(r, "result");
    need(buf, "buf");
    require(len >= r->outcome.trace.size(), "buffer too small");
    std::copy(r->outcome.trace.begin(), r->outcome.trace.end(), buf);
  });
}

ihmp_status ihmp_result_accuracy(const ihmp_result* r, const ihmp_dataset* d, double* acc) {
  return guard([&] {
    need(r, "result");
    need(d, "dataset");
    need(acc, "accuracy");
    const auto& truth = d->data.truth.switch_labels;
    require(truth.size() == r->outcome.labels.size(),
            "dataset has no source labels matching the fit");
    *acc = padded_accuracy(r->outcome.labels, truth);
  });
}

ihmp_status ihmp_result_mse(const ihmp_result* r, const ihmp_dataset* d, double* mse) {
  return guard([&] {
    need(r, "result");
    need(d, "dataset");
    need(mse, "mse");
    require(r->outcome.params.has_value(), "mean MSE needs an em, mfvi or svi fit");
    require(d->data.has_params, "dataset has no generating parameters");
    const auto& truth = d->data.truth.switch_labels;
    require(truth.size() == r->outcome.labels.size(), "dataset labels do not match the fit");
    const std::vector<int> chains =
        matching_permutation(r->outcome.labels, truth, r->outcome.num_labels);
    *mse = mse_means(*r->outcome.params, d->data.params, chains).mse;
  });
}

ihmp_status ihmp_result_to_json(const ihmp_result* r, char** json) {
  return guard([&] {
    need(r, "result");
    need(json, "json");
    *json = dup(r->full ? result_to_json(*r->full) : baseline_json(*r));
  });
}

ihmp_status ihmp_result_write(const ihmp_result* r, const char* prefix) {
  return guard([&] {
    need(r, "result");
    need(prefix, "prefix");
    const std::string p = prefix;
    write_text(p + ".json", r->full ? result_to_json(*r->full) : baseline_json(*r));
    write_labels_csv(p + ".labels.csv", r->outcome.labels,
                     r->full ? r->full->decoded_states : std::vector<std::vector<int>>{});
    write_trace_csv(p + ".trace.csv", r->outcome.trace,
                    r->outcome.method == "ga" ? "cost" : "objective");
  });
}

ihmp_status ihmp_error_bound(int scenario, double sd, double* bound) {
  return guard([&] {
    need(bound, "bound");
    *bound = error_lower_bound(scenario_bound_inputs(scenario, sd));
  });
}

ihmp_status ihmp_error_bound_custom(const double switch_trans[4], const double trans_a[4],
                                    const double trans_b[4], const double means[4], double sd,
                                    double* bound) {
  return guard([&] {
    need(switch_trans, "switch_trans");
    need(trans_a, "trans_a");
    need(trans_b, "trans_b");
    need(means, "means");
    need(bound, "bound");
    auto mat = [](const double* v) {
      Mat m(2, 2);
      m << v[0], v[1], v[2], v[3];
      return m;
    };
    BoundInputs in;
    in.switch_trans = mat(switch_trans);
    in.chain_trans = {mat(trans_a), mat(trans_b)};
    in.means[0] = Vec(2);
    in.means[1] = Vec(2);
    in.means[0] << means[0], means[1];
    in.means[1] << means[2], means[3];
    in.sigma = sd;
    *bound = error_lower_bound(in);
  });
}

ihmp_status ihmp_count_partitions(int n, int imp, uint64_t* count) {
  return guard([&] {
    need(count, "count");
    *count = imp ? count_partitions_imp(n) : count_partitions_ihmp(n);
  });
}

ihmp_status ihmp_experiment(const char* preset, const ihmp_options* o, char** csv,
                            char** warnings) {
  return guard([&] {
    need(preset, "preset");
    need(csv, "csv");
    const ihmp_options dflt{};
    const ExperimentReport rep = run_experiment(preset, (o ? *o : dflt).exp);
    std::string w;
    for (const std::string& line : rep.warnings) w += line + "\n";
    *csv = dup(rows_to_csv(rep.rows));
    if (warnings) *warnings = dup(w);
  });
}

}  // extern "C"
