// Independent reference computations used by the tests. Nothing here calls
// into the library's inference code.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "ihmp/model.hpp"
#include "ihmp/rng.hpp"

namespace oracle {

using ihmp::Mat;
using ihmp::Vec;

inline double normal_pdf_1d(double x, double mu, double var) {
  const double pi = std::acos(-1.0);
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * pi * var);
}

// Density of N(mean, cov) at x via an explicit inverse and determinant.
inline double normal_pdf(const Vec& x, const Vec& mean, const Mat& cov) {
  const double pi = std::acos(-1.0);
  const Vec d = x - mean;
  const double q = d.dot(cov.inverse() * d);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * pi, x.size()) * cov.determinant());
}

inline Vec random_simplex(ihmp::Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = 0.05 + rng.uniform();
  return v / v.sum();
}

inline ihmp::ModelParams random_params(ihmp::Rng& rng, std::vector<int> K, int D = 1) {
  const int M = static_cast<int>(K.size());
  ihmp::ModelParams p = ihmp::ModelParams::uniform(K, D);
  p.switch_init = random_simplex(rng, M);
  for (int i = 0; i < M; ++i) p.switch_trans.row(i) = random_simplex(rng, M).transpose();
  for (int m = 0; m < M; ++m) {
    p.chain_init[m] = random_simplex(rng, K[m]);
    for (int i = 0; i < K[m]; ++i)
      p.chain_trans[m].row(i) = random_simplex(rng, K[m]).transpose();
    for (int i = 0; i < K[m]; ++i)
      for (int d = 0; d < D; ++d) p.means[m](i, d) = rng.uniform(-2.0, 2.0);
  }
  Mat a(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = rng.uniform(-0.5, 0.5);
  p.shared_cov = a * a.transpose() + rng.uniform(0.3, 1.5) * Mat::Identity(D, D);
  return p;
}

struct Posterior {
  double log_likelihood = 0.0;
  Mat switch_marginals;             // T x M
  std::vector<Mat> state_marginals;  // [m] T x K
};

// Sums the joint over every trajectory consistent with the idle-freeze rule:
// at t = 0 all chains draw from pi^m; afterwards only the active chain moves.
inline Posterior enumerate(const ihmp::ModelParams& p, const Mat& obs) {
  const int T = static_cast<int>(obs.rows());
  const int M = p.num_chains();
  const std::vector<int>& K = p.state_counts;
  Posterior out;
  out.switch_marginals = Mat::Zero(T, M);
  for (int m = 0; m < M; ++m) out.state_marginals.push_back(Mat::Zero(T, K[m]));

  std::vector<int> z(T);
  std::vector<std::vector<int>> s(T, std::vector<int>(M));
  double total = 0.0;

  auto emit = [&](int t) {
    const int m = z[t];
    return normal_pdf(obs.row(t).transpose(), p.means[m].row(s[t][m]).transpose(), p.shared_cov);
  };

  std::function<void(int, double)> step = [&](int t, double w) {
    if (t == T) {
      total += w;
      for (int u = 0; u < T; ++u) {
        out.switch_marginals(u, z[u]) += w;
        for (int m = 0; m < M; ++m) out.state_marginals[m](u, s[u][m]) += w;
      }
      return;
    }
    for (int zt = 0; zt < M; ++zt) {
      z[t] = zt;
      const double pz = p.switch_trans(z[t - 1], zt);
      s[t] = s[t - 1];
      for (int k = 0; k < K[zt]; ++k) {
        s[t][zt] = k;
        const double ps = p.chain_trans[zt](s[t - 1][zt], k);
        step(t + 1, w * pz * ps * emit(t));
      }
      s[t][zt] = s[t - 1][zt];
    }
  };

  // t = 0: switch label and every chain's initial state.
  std::vector<int> init(M, 0);
  std::function<void(int, double)> first = [&](int m, double w) {
    if (m == M) {
      for (int zt = 0; zt < M; ++zt) {
        z[0] = zt;
        s[0] = init;
        step(1, w * p.switch_init(zt) * emit(0));
      }
      return;
    }
    for (int k = 0; k < K[m]; ++k) {
      init[m] = k;
      first(m + 1, w * p.chain_init[m](k));
    }
  };
  first(0, 1.0);

  out.log_likelihood = std::log(total);
  out.switch_marginals /= total;
  for (Mat& sm : out.state_marginals) sm /= total;
  return out;
}

// Minimum-cost permutation by trying all of them; ties keep the
// lexicographically first.
inline std::vector<int> brute_assign(const Mat& cost, double* best_cost = nullptr) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_v = 0.0;
  do {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += cost(i, perm[i]);
    if (best.empty() || v < best_v - 1e-12) {
      best_v = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best_cost) *best_cost = best_v;
  return best;
}

// Best label agreement over all relabelings of pred.
inline double brute_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int M) {
  std::vector<int> perm(M);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    int hit = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) hit += perm[pred[t]] == truth[t];
    best = std::max(best, static_cast<double>(hit) / pred.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Log-likelihood of a sequence under first-order ML estimates, first symbol
// uniform over `alphabet` values.
inline double markov_ml_loglik(const std::vector<int>& seq, int alphabet) {
  if (seq.empty()) return 0.0;
  Mat counts = Mat::Zero(alphabet, alphabet);
  for (std::size_t i = 1; i < seq.size(); ++i) counts(seq[i - 1], seq[i]) += 1.0;
  double ll = -std::log(static_cast<double>(alphabet));
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double row = counts.row(seq[i - 1]).sum();
    ll += std::log(counts(seq[i - 1], seq[i]) / row);
  }
  return ll;
}

// IMP penalized cost from the sequence decomposition: switching sequence of
// block labels plus each block's own subsequence.
inline double imp_cost(const std::vector<int>& symbols, const std::vector<int>& block_of,
                       double beta) {
  const int B = *std::max_element(block_of.begin(), block_of.end()) + 1;
  std::vector<int> switching;
  std::vector<std::vector<int>> sub(B);
  std::vector<std::vector<int>> members(B);
  for (int a = 0; a < static_cast<int>(block_of.size()); ++a) members[block_of[a]].push_back(a);
  for (int x : symbols) {
    const int b = block_of[x];
    switching.push_back(b);
    const auto pos = std::find(members[b].begin(), members[b].end(), x) - members[b].begin();
    sub[b].push_back(static_cast<int>(pos));
  }
  double ll = markov_ml_loglik(switching, B);
  for (int b = 0; b < B; ++b) ll += markov_ml_loglik(sub[b], static_cast<int>(members[b].size()));
  double kappa = static_cast<double>(B) * (B - 1);
  for (const auto& mb : members) kappa += static_cast<double>(mb.size()) * (mb.size() - 1.0);
  const double n = static_cast<double>(symbols.size());
  return -ll / n + beta * kappa * std::log(n + 1.0);
}

// All set partitions of {0..n-1} as restricted growth strings.
inline std::vector<std::vector<int>> set_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int maxb) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (int b = 0; b <= maxb + 1; ++b) {
      a[i] = b;
      rec(i + 1, std::max(maxb, b));
    }
  };
  if (n == 0) return {{}};
  a[0] = 0;
  rec(1, 0);
  return out;
}

}  // namespace oracle
