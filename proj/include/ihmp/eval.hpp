#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ihmp/common.hpp"
#include "ihmp/model.hpp"

namespace ihmp {

/// Minimum-cost assignment of rows to columns (Hungarian algorithm).
/// perm[i] is the column given to row i. Among optimal assignments the
/// lexicographically smallest perm is returned.
std::vector<int> munkres_assign(const Mat& cost);

/// Fraction of positions whose predicted label matches the truth after the
/// best one-to-one relabeling of predictions. Labels must lie in [0, M).
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int M);

/// Predicted label -> true label map used by accuracy().
std::vector<int> matching_permutation(const std::vector<int>& pred,
                                      const std::vector<int>& truth, int M);

struct MeanAlignment {
  double mse = 0.0;
  std::vector<int> chain_perm;               // estimated chain -> true chain
  std::vector<std::vector<int>> state_perm;  // per estimated chain, state -> true state
};

/// Mean squared error of the symbol means after aligning chains and states.
/// With an empty `chain_perm` chains are aligned by a Munkres pass over the
/// per-pair state-aligned errors; states are always aligned within a chain.
MeanAlignment mse_means(const ModelParams& estimated, const ModelParams& truth,
                        const std::vector<int>& chain_perm = {});

// ---- Monte-Carlo harness ------------------------------------------------------

using TrialMetrics = std::map<std::string, double>;

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for a single trial)
  int count = 0;
};

struct MonteCarloSummary {
  std::map<std::string, MetricSummary> metrics;
  std::vector<TrialMetrics> trials;  // successful trials, in seed order
  int failures = 0;
  std::vector<std::string> failure_messages;
};

/// Seeds for `trials` independent runs derived from `base_seed`.
std::vector<std::uint64_t> trial_seeds(std::uint64_t base_seed, int trials);

/// Runs `run` once per seed on up to `jobs` threads. Failed trials are
/// excluded and counted; throws when every trial fails.
MonteCarloSummary monte_carlo(const std::function<TrialMetrics(std::uint64_t)>& run,
                              const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Applies `body(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

}  // namespace ihmp
