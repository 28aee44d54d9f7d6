#pragma once

#include <vector>

#include "ihmp/common.hpp"

namespace ihmp {

/// Smoothing marginals of a single Markov chain with node potentials.
struct ChainPosterior {
  Mat node;               // T x K, rows sum to 1
  std::vector<Mat> pair;  // pair[t] (t >= 1): K x K, (j, i) = P(S_{t-1}=j, S_t=i)
  Vec log_scale;          // per-step log normalizers of the forward pass
  double log_norm = 0.0;  // log of the total path mass

  int length() const { return static_cast<int>(node.rows()); }

  /// Entropy of the chain distribution, computed from node and pair marginals.
  double entropy() const;
};

/// Entropy of a Markov chain given its node and two-slice marginals.
double markov_entropy(const Mat& node, const std::vector<Mat>& pair);

/// Log-space forward-backward with per-step normalization.
///
/// log_init: length K. log_node: T x K unnormalized log potentials.
/// log_trans: K x K log transition weights shared by every step.
ChainPosterior smooth_chain(const Vec& log_init, const Mat& log_node,
                            const Mat& log_trans);

/// As above with a step-dependent transition; log_trans[t] (t >= 1) maps
/// S_{t-1} to S_t, log_trans[0] is ignored.
ChainPosterior smooth_chain(const Vec& log_init, const Mat& log_node,
                            const std::vector<Mat>& log_trans);

}  // namespace ihmp
