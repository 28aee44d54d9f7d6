#pragma once

#include <cstdint>
#include <vector>

#include "ihmp/common.hpp"
#include "ihmp/model.hpp"
#include "ihmp/rng.hpp"

namespace ihmp {

// ---- clustering helpers -----------------------------------------------------

struct Codebook {
  Mat centers;              // k x D
  std::vector<int> labels;  // nearest center per row
  double inertia = 0.0;     // sum of squared distances
};

/// Lloyd k-means with k-means++ seeding; the lowest-inertia run of
/// `restarts` is kept. Requires at least k distinct rows.
Codebook kmeans(const Mat& data, int k, Rng& rng, int max_iter = 100,
                int restarts = 1);
Codebook kmeans_once(const Mat& data, int k, Rng& rng, int max_iter = 100);

/// Index of the nearest center for every row (ties toward the smaller index).
std::vector<int> nearest_labels(const Mat& data, const Mat& centers);

// ---- Gaussian mixture / HMM baselines --------------------------------------

struct GmmResult {
  Vec weights;                    // k
  Mat means;                      // k x D
  std::vector<Mat> covs;          // k, D x D
  Mat responsibilities;           // T x k
  std::vector<int> labels;
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
};

GmmResult gmm_fit(const Mat& data, int num_components, std::uint64_t seed,
                  int max_iter = 100, double tol = 1e-6);

struct HmmResult {
  Vec init;                       // k
  Mat trans;                      // k x k
  Mat means;                      // k x D
  std::vector<Mat> covs;
  Mat marginals;                  // T x k
  std::vector<int> labels;
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
};

HmmResult hmm_fit(const Mat& data, int num_states, std::uint64_t seed,
                  int max_iter = 100, double tol = 1e-6);

// ---- IMP penalized cost and GA partition search ----------------------------

/// Set partition of an alphabet 0..A-1: block index per symbol.
using Partition = std::vector<int>;

/// Relabels blocks in order of first appearance; returns the block count.
int canonicalize(Partition& partition);

/// Number of free parameters of a first-order IMP with this partition.
double imp_kappa(const Partition& partition);

/// Normalized empirical entropy of the switching sequence plus every
/// per-block subsequence under first-order ML transition estimates.
double imp_entropy(const std::vector<int>& symbols, const Partition& partition);

/// imp_entropy + beta * kappa * log(n + 1).
double imp_penalized_cost(const std::vector<int>& symbols,
                          const Partition& partition, double beta = 0.5);

struct GaOptions {
  int population = 50;
  int generations = 200;
  double beta = 0.5;
  double mutation_rate = 0.3;
  double crossover_rate = 0.7;
  bool crossover = true;
  int jobs = 1;
  std::uint64_t seed = 1;
};

struct GaResult {
  Partition best;
  double best_cost = 0.0;
  std::vector<double> cost_trace;  // best cost after each generation
  bool converged = false;          // best unchanged over the last quarter
};

/// GA over set partitions of 0..alphabet-1 minimizing imp_penalized_cost.
GaResult ga_partition_search(const std::vector<int>& symbols, int alphabet,
                             const GaOptions& options = {});

/// Assignment of alphabet symbols to blocks of the given sizes minimizing
/// imp_entropy. Exhaustive when small, otherwise pairwise-swap descent from
/// a random start.
Partition best_sized_partition(const std::vector<int>& symbols,
                               const std::vector<int>& block_sizes, Rng& rng);

/// GA labeling of a continuous stream: quantize to a codebook of
/// `codebook_size` symbols, search partitions, label each observation by the
/// block of its symbol.
struct GaLabeling {
  Codebook codebook;
  GaResult search;
  std::vector<int> labels;
};

GaLabeling ga_label(const Mat& data, int codebook_size, const GaOptions& options);

}  // namespace ihmp
