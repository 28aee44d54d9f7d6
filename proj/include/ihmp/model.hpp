#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ihmp/common.hpp"

namespace ihmp {

inline constexpr double kStochasticTol = 1e-9;

/// Parameters of an interleaved hidden Markov process.
///
/// M component chains are gated by a switching chain: at each step the
/// switching chain picks the active component, which takes one transition and
/// emits; idle components keep their state. Every symbol (chain m, state i) is
/// the Gaussian N(means[m].row(i), shared_cov). Indices are zero-based.
struct ModelParams {
  std::vector<int> state_counts;  // K^m, one entry per chain
  int obs_dim = 1;                // D

  Vec switch_init;   // length M
  Mat switch_trans;  // M x M, row-stochastic

  std::vector<Vec> chain_init;   // per chain, length K^m
  std::vector<Mat> chain_trans;  // per chain, K^m x K^m
  std::vector<Mat> means;        // per chain, K^m x D (row i = mean of state i)
  Mat shared_cov;                // D x D

  int num_chains() const { return static_cast<int>(state_counts.size()); }
  int total_symbols() const;

  /// Allocates uniform probabilities, zero means and identity covariance.
  static ModelParams uniform(std::vector<int> state_counts, int obs_dim);
};

/// Interleaved observation stream p_1..p_T, one row per time step.
struct ObservationSequence {
  Mat values;  // T x D

  int length() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }

  static ObservationSequence from_scalars(const std::vector<double>& xs);
};

/// Switching labels Z_t and per-chain states S_t^m (all zero-based).
struct LatentTrajectory {
  std::vector<int> switch_labels;          // length T
  std::vector<std::vector<int>> states;    // [chain][t]

  int length() const { return static_cast<int>(switch_labels.size()); }

  /// State of the active chain at each step.
  std::vector<int> active_states() const;
};

/// Complete list of invariant violations; empty means valid.
std::vector<std::string> validate(const ModelParams& params);

/// Throws kInvalidArgument listing every violation.
void ensure_valid(const ModelParams& params);

/// Renormalizes probability vectors / rows and symmetrizes the covariance when
/// they are within kStochasticTol of valid. Larger deviations are left alone
/// so validate() still reports them.
void renormalize(ModelParams& params);

/// Cached Cholesky factor of the shared covariance for density evaluation.
class GaussianKernel {
 public:
  explicit GaussianKernel(const Mat& cov);

  /// log N(x; mean, cov) including the normalization term.
  double log_density(const Eigen::Ref<const Vec>& x,
                     const Eigen::Ref<const Vec>& mean) const;

  double log_det() const { return log_det_; }
  const Mat& precision() const { return precision_; }

 private:
  Eigen::LLT<Mat> llt_;
  Mat precision_;
  double log_det_ = 0.0;
  int dim_ = 0;
};

/// log f_{phi_i^m}(obs).
double log_emission(const ModelParams& params, int chain, int state,
                    const Eigen::Ref<const Vec>& obs);

/// Per-chain tables of log emission densities: [m] is T x K^m.
std::vector<Mat> log_emission_tables(const ModelParams& params,
                                     const ObservationSequence& obs);

/// log P(S_t^m = to | S_{t-1}^m = from, chain active or idle).
/// Idle chains follow the identity, so idle moves return kLogZero.
double gated_transition_logprob(const ModelParams& params, int chain, int from,
                                int to, bool active);

/// Checks lengths and the idle-freeze property; throws on violation.
void check_trajectory(const ModelParams& params, const LatentTrajectory& traj);

/// log P(Z, S | params): switching prior and gated chain transitions only.
double log_prior(const ModelParams& params, const LatentTrajectory& traj);

/// log P(Z, S, p | params).
double log_joint(const ModelParams& params, const LatentTrajectory& traj,
                 const ObservationSequence& obs);

/// Unique stationary vector of an ergodic row-stochastic matrix, obtained by
/// solving the null-space system with a sum-to-one row.
Vec stationary_distribution(const Mat& trans);

/// Number of integer partitions of n (the IHMP partition search space).
std::uint64_t count_partitions_ihmp(int n);

/// Bell number B(n) = sum_i Stirling2(n, i) (the IMP search space).
std::uint64_t count_partitions_imp(int n);

}  // namespace ihmp
