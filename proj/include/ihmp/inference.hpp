#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "ihmp/chain_smoother.hpp"
#include "ihmp/model.hpp"
#include "ihmp/rng.hpp"

namespace ihmp {

enum class Algorithm { kExact, kMfvi, kSvi };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

enum class InitStrategy {
  kAuto,            // fit from kCodebook and kSharedCodebook, keep the better
  kCodebook,        // k-means codebook, symbols grouped into chains by IMP entropy
  kSharedCodebook,  // every chain starts from the same k-means codebook
  kRandom,          // means uniform over the data range
};

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-6;             // relative objective change
  std::uint64_t seed = 1;
  std::optional<ModelParams> init;
  std::size_t state_cap = 4096;  // product states allowed for exact EM
  bool learn_params = true;      // false: E-step only, parameters held fixed
  double cov_floor_rel = 1e-6;   // covariance floor, relative to data variance
  double damping = 1.0;          // mean-field row mixing factor in (0, 1]
  int inner_sweeps = 1;          // variational E-sweeps per M-step
  int anneal_iters = 20;         // variational warm-up rounds, not traced
  int restarts = 4;              // independent initializations; best final objective kept
  double init_concentration = 5.0;
  InitStrategy init_strategy = InitStrategy::kAuto;
};

struct InferenceResult {
  Algorithm algorithm = Algorithm::kExact;
  std::uint64_t seed = 0;
  ModelParams params;
  Mat switch_marginals;                 // T x M
  std::vector<Mat> state_marginals;     // per chain, T x K^m
  std::vector<int> decoded_source;      // d_t
  std::vector<std::vector<int>> decoded_states;  // per chain
  std::vector<double> objective_trace;  // log-likelihood or ELBO per iteration
  int iterations = 0;
  bool converged = false;
};

/// Variational marginals shared by the mean-field and structured schemes.
///
/// For the structured scheme `phi`/`theta` are the smoothing marginals of the
/// M+1 surrogate chains; `log_h` and `log_g` are the log surrogate emissions
/// that produced them, and the pair tables hold their two-slice marginals.
struct VariationalState {
  Mat phi;                 // T x M
  std::vector<Mat> theta;  // per chain, T x K^m

  std::vector<Mat> log_h;  // per chain, T x K^m
  Mat log_g;               // T x M
  std::vector<std::vector<Mat>> chain_pair;  // [m][t], K^m x K^m
  std::vector<Mat> switch_pair;              // [t], M x M

  int length() const { return static_cast<int>(phi.rows()); }
};

// ---- shared building blocks -------------------------------------------------

/// Random initial parameters: means uniform over the data range, Dirichlet
/// transition rows, uniform initial vectors, sample covariance.
ModelParams random_init(const ObservationSequence& obs,
                        const std::vector<int>& state_counts, Rng& rng,
                        double concentration);

/// k-means codebook of sum K^m centers; codebook symbols are assigned to
/// chains by minimizing the IMP entropy of the quantized stream, transitions
/// are Dirichlet draws and the covariance is the within-cluster scatter.
ModelParams codebook_init(const ObservationSequence& obs,
                          const std::vector<int>& state_counts, Rng& rng,
                          double concentration);

/// Expected sufficient statistics for the M-step.
struct SufficientStats {
  Vec switch_first;               // E[Z_1]
  Mat switch_counts;              // sum_t E[Z_{t-1} Z_t^T]
  std::vector<Vec> chain_first;   // E[S_1^m]
  std::vector<Mat> chain_counts;  // expected active transitions
  std::vector<Mat> resp;          // [m] T x K^m, E[Z_{t,m} S_{t,k}^m]
};

/// Expected-count M-step with probability floor and empty-row retention.
ModelParams m_step(const SufficientStats& stats, const ObservationSequence& obs,
                   const ModelParams& prev, double cov_floor_rel);

/// Moore-Penrose pseudo-inverse with relative singular-value cutoff.
Mat pseudo_inverse(const Mat& a, double rel_tol = 1e-10);

/// Index of the first maximal entry.
int argmax_first(const Eigen::Ref<const Vec>& v);

/// Fills decoded_source / decoded_states from the marginals.
void decode(InferenceResult& result);

/// Codebook of max K^m centers copied into every chain (chains with fewer
/// states take a smaller codebook); for sources that share symbol values.
ModelParams shared_codebook_init(const ObservationSequence& obs,
                                 const std::vector<int>& state_counts, Rng& rng,
                                 double concentration);

/// Initial parameters for a fit: options.init or a seeded random draw.
ModelParams initial_params(const ObservationSequence& obs,
                           const std::vector<int>& state_counts,
                           const FitOptions& options);

// ---- exact EM on the product chain -----------------------------------------

class ProductStateIndex {
 public:
  explicit ProductStateIndex(std::vector<int> state_counts);

  std::size_t size() const { return size_; }
  int num_chains() const { return static_cast<int>(counts_.size()); }

  /// Flat index of (z, s^1..s^M).
  std::size_t flatten(int z, const std::vector<int>& s) const;
  /// Inverse of flatten; s is resized to M.
  int unflatten(std::size_t index, std::vector<int>& s) const;

 private:
  std::vector<int> counts_;
  std::vector<std::size_t> stride_;
  std::size_t block_ = 1;  // prod K^m
  std::size_t size_ = 0;
};

/// Product-state count M * prod K^m; throws kResourceCap above `cap`.
std::size_t product_state_count(const std::vector<int>& state_counts,
                                std::size_t cap);

struct ProductChain {
  Vec init;                                      // length N
  Eigen::SparseMatrix<double, Eigen::RowMajor> trans;  // N x N
  Mat log_emission;                              // T x N
};

ProductChain build_product_chain(const ModelParams& params,
                                 const ObservationSequence& obs,
                                 std::size_t cap = 4096);

/// Exact posterior of one parameter setting.
struct ExactPosterior {
  double log_likelihood = 0.0;
  Mat product_marginals;  // T x N
  Mat switch_marginals;
  std::vector<Mat> state_marginals;
  SufficientStats stats;
};

ExactPosterior exact_posterior(const ModelParams& params,
                               const ObservationSequence& obs,
                               std::size_t cap = 4096);

/// log P(p | params) by the product-chain forward pass.
double exact_log_likelihood(const ModelParams& params,
                            const ObservationSequence& obs,
                            std::size_t cap = 4096);

InferenceResult em_fit(const ObservationSequence& obs,
                       const std::vector<int>& state_counts,
                       const FitOptions& options = {});

// ---- mean-field VI ----------------------------------------------------------

/// Marginals initialized from emission responsibilities under `params`.
VariationalState initial_variational_state(const ModelParams& params,
                                           const ObservationSequence& obs);

double elbo_mf(const ModelParams& params, const ObservationSequence& obs,
               const VariationalState& vs);

/// One forward sweep of coordinate updates (all theta_t^m, then phi_t).
void mf_sweep(const ModelParams& params, const std::vector<Mat>& log_emis,
              VariationalState& vs, double damping = 1.0,
              double idle_log_floor = 0.0);

SufficientStats mf_stats(const VariationalState& vs);

InferenceResult mfvi_fit(const ObservationSequence& obs,
                         const std::vector<int>& state_counts,
                         const FitOptions& options = {});

// ---- structured VI ----------------------------------------------------------

/// One block-coordinate round: component chains, then the switching chain.
/// A negative idle_log_floor softens the idle identity (log 0 -> floor).
void svi_update(const ModelParams& params, const std::vector<Mat>& log_emis,
                VariationalState& vs, double idle_log_floor = 0.0);

/// Structured state: flat marginals followed by one block-coordinate round.
VariationalState initial_structured_state(const ModelParams& params,
                                          const ObservationSequence& obs);

double elbo_structured(const ModelParams& params,
                       const ObservationSequence& obs,
                       const VariationalState& vs);

SufficientStats svi_stats(const VariationalState& vs);

InferenceResult svi_fit(const ObservationSequence& obs,
                        const std::vector<int>& state_counts,
                        const FitOptions& options = {});

/// Dispatches to em_fit / mfvi_fit / svi_fit.
InferenceResult fit(Algorithm algorithm, const ObservationSequence& obs,
                    const std::vector<int>& state_counts,
                    const FitOptions& options = {});

}  // namespace ihmp
