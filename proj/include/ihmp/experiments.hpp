#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ihmp/baselines.hpp"
#include "ihmp/inference.hpp"
#include "ihmp/simulate.hpp"

namespace ihmp {

// ---- single-method runs ---------------------------------------------------------

/// Settings shared by every de-interleaving method.
struct MethodOptions {
  FitOptions fit;       // em / mfvi / svi
  GaOptions ga;         // ga
  int baseline_max_iter = 100;
};

struct MethodOutcome {
  std::string method;
  std::vector<int> labels;  // source label per observation
  int num_labels = 0;       // labels lie in [0, num_labels)
  bool converged = false;
  int iterations = 0;
  double seconds = 0.0;
  std::optional<ModelParams> params;  // em / mfvi / svi only
  std::vector<double> trace;          // objective or GA cost per iteration
};

/// Known methods: em, mfvi, svi, gmm, hmm, ga.
const std::vector<std::string>& method_names();

/// De-interleaves `obs` into state_counts.size() sources with the named method.
/// gmm / hmm use one component per source; ga quantizes to sum K^m symbols.
MethodOutcome run_method(const std::string& method, const ObservationSequence& obs,
                         const std::vector<int>& state_counts,
                         const MethodOptions& options, std::uint64_t seed);

/// Matched accuracy for labels of any range: the confusion table is padded to
/// a square before matching, so surplus predicted labels count as errors.
double padded_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// ---- experiment presets -----------------------------------------------------------

struct ExperimentOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  int length = 900;
  std::vector<std::string> algorithms;  // empty: preset default
  std::vector<double> grid;             // empty: preset default x grid
  double sd = 0.1;                      // fixed sd where the x axis is not sd
  double missing_ratio = 0.0;
  double alpha = 15.0;
  double jitter_var = 0.8;
  int qn = 2;
  MethodOptions method;
};

/// One tidy output row.
struct ExperimentRow {
  std::string preset;
  std::string group;  // sub-panel (scenario, geometry, jitter), may be empty
  std::string x_name;
  double x = 0.0;
  std::string algorithm;
  std::string statistic;
  double value = 0.0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::vector<std::string> warnings;  // failed grid points and trials
};

/// fig4, fig5, fig6, fig7, fig8a, fig8b, fig9.
const std::vector<std::string>& experiment_presets();

ExperimentReport run_experiment(const std::string& preset, const ExperimentOptions& options);

/// Header `preset,group,x_name,x,algorithm,statistic,value`.
std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

}  // namespace ihmp
