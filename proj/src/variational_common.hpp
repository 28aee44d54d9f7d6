#pragma once

#include <functional>
#include <vector>

#include "ihmp/inference.hpp"

namespace ihmp::detail {

// Floored log parameters shared by the variational schemes.
struct LogParams {
  // idle_log_floor replaces log 0 in the idle identity (annealing only).
  explicit LogParams(const ModelParams& p, double idle_log_floor = 0.0);

  // phi * log A^m + (1 - phi) * log E^m
  Mat gated(int m, double phi) const;

  Vec log_switch_init;
  Mat log_switch_trans;
  std::vector<Vec> log_chain_init;
  std::vector<Mat> log_chain_trans;
  std::vector<Mat> log_idle;
};

// sum q log q over all entries (floored log).
double neg_entropy_terms(const Eigen::Ref<const Mat>& q);

// sum_t sum_m phi_{t,m} theta_t^m . log f^m_t
double emission_term(const VariationalState& vs, const std::vector<Mat>& log_emis);

void check_finite(const Vec& logits, const char* what, int t);

// Runs `once` for every restart seed and keeps the run with the highest final
// objective. Restart 0 uses the configured seed.
InferenceResult best_of_restarts(
    const FitOptions& opt, const std::function<InferenceResult(const FitOptions&)>& once);

InferenceResult variational_fit(Algorithm algorithm, const ObservationSequence& obs,
                                const std::vector<int>& state_counts,
                                const FitOptions& opt);

}  // namespace ihmp::detail
