#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ihmp/common.hpp"
#include "ihmp/inference.hpp"

namespace ihmp {

/// Two binary-state Gaussian sources with disjoint means and a common sd.
struct BoundInputs {
  Mat switch_trans = Mat::Constant(2, 2, 0.5);  // A^z
  std::array<Mat, 2> chain_trans{Mat::Constant(2, 2, 0.5), Mat::Constant(2, 2, 0.5)};
  std::array<Vec, 2> means{Vec::Zero(2), Vec::Zero(2)};  // means[y](k)
  double sigma = 1.0;

  /// Throws kInvalidArgument on non-stochastic, non-ergodic or overlapping input.
  void check() const;
};

/// Inputs of error scenario 1, 2 or 3 at standard deviation sd.
BoundInputs scenario_bound_inputs(int scenario, double sd);

/// P(N(0,1) > x).
double right_tail_Q(double x);

/// Decision threshold between state k of source y and state l of the other
/// source, given the previous source x: the point where the two
/// prior-weighted likelihoods cross. Indices are 0-based.
double gamma_threshold(const BoundInputs& in, int x, int y, int k, int l);

/// Lower bound on the per-observation source error probability, in [0, 1].
double error_lower_bound(const BoundInputs& in);

/// Source error of the per-observation MAP rule that knows the parameters
/// and the previous source, estimated from `samples` stationary draws.
double optimal_rule_error(const BoundInputs& in, int samples, std::uint64_t seed);

struct BoundRow {
  double sd = 0.0;
  double mean_error = 0.0;  // mean P_e over successful trials
  double std_error = 0.0;
  double bound = 0.0;
  int trials = 0;
  int failures = 0;
  double converged_rate = 0.0;
};

struct BoundComparisonOptions {
  int trials = 100;
  int length = 900;
  std::uint64_t seed = 1;
  int jobs = 1;
  FitOptions fit;
};

/// Empirical P_e of `algorithm` on error scenario `scenario` for each sd,
/// next to the bound. Fit failures are counted per row, not fatal.
std::vector<BoundRow> compare_to_bound(Algorithm algorithm, int scenario,
                                       const std::vector<double>& sd_grid,
                                       const BoundComparisonOptions& options = {});

}  // namespace ihmp
