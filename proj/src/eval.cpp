#include "ihmp/eval.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>

#include "ihmp/rng.hpp"

namespace ihmp {

namespace {

// Shortest augmenting path Hungarian method with row/column potentials.
// Returns the optimal total cost; assign[i] receives the column of row i.
double hungarian(const Mat& a, std::vector<int>& assign) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  assign.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    assign[p[j] - 1] = j - 1;
    total += a(p[j] - 1, j - 1);
  }
  return total;
}

double optimal_cost(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  std::vector<int> tmp;
  return hungarian(a, tmp);
}

Mat drop_row_col(const Mat& a, int row, int col) {
  const Eigen::Index n = a.rows();
  Mat out(n - 1, n - 1);
  for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
    if (i == row) continue;
    for (Eigen::Index j = 0, oj = 0; j < n; ++j) {
      if (j == col) continue;
      out(oi, oj++) = a(i, j);
    }
    ++oi;
  }
  return out;
}

void check_labels(const std::vector<int>& labels, int M, const char* what) {
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (labels[t] < 0 || labels[t] >= M)
      fail(ErrorKind::kInvalidArgument, std::string(what) + " label " +
                                            std::to_string(labels[t]) + " at position " +
                                            std::to_string(t) + " is outside [0, " +
                                            std::to_string(M) + ")");
}

Mat overlap(const std::vector<int>& pred, const std::vector<int>& truth, int M) {
  require(M >= 1, "accuracy needs M >= 1");
  require(pred.size() == truth.size(), "label sequences differ in length");
  check_labels(pred, M, "predicted");
  check_labels(truth, M, "true");
  Mat c = Mat::Zero(M, M);
  for (std::size_t t = 0; t < pred.size(); ++t) c(pred[t], truth[t]) += 1.0;
  return c;
}

}  // namespace

std::vector<int> munkres_assign(const Mat& cost) {
  require(cost.rows() == cost.cols(), "munkres_assign needs a square matrix");
  require(cost.allFinite(), "munkres_assign needs finite costs");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};

  const double best = optimal_cost(cost);
  const double eps = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff() * n);

  // Fix rows in order, taking the smallest column that still admits an
  // optimal completion.
  std::vector<int> perm(n, -1);
  std::vector<int> rows(n), cols(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  Mat rest = cost;
  double fixed = 0.0;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
      const Mat sub = drop_row_col(rest, 0, c);
      const double total = fixed + rest(0, c) + optimal_cost(sub);
      if (total <= best + eps) {
        perm[rows[i]] = cols[c];
        fixed += rest(0, c);
        cols.erase(cols.begin() + c);
        rest = sub;
        placed = true;
        break;
      }
    }
    if (!placed) fail(ErrorKind::kNumerical, "munkres_assign lost the optimum");
  }
  return perm;
}

std::vector<int> matching_permutation(const std::vector<int>& pred,
                                      const std::vector<int>& truth, int M) {
  return munkres_assign(-overlap(pred, truth, M));
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int M) {
  const Mat c = overlap(pred, truth, M);
  if (pred.empty()) return 1.0;
  const std::vector<int> perm = munkres_assign(-c);
  double hit = 0.0;
  for (int i = 0; i < M; ++i) hit += c(i, perm[i]);
  return hit / static_cast<double>(pred.size());
}

MeanAlignment mse_means(const ModelParams& est, const ModelParams& truth,
                        const std::vector<int>& chain_perm) {
  const int M = est.num_chains();
  require(truth.num_chains() == M, "mse_means: chain counts differ");
  require(est.obs_dim == truth.obs_dim, "mse_means: observation dimensions differ");
  {
    std::vector<int> a = est.state_counts, b = truth.state_counts;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    require(a == b, "mse_means: state counts differ");
  }

  // Squared error of chain e against chain r after the best state matching.
  auto pair_cost = [&](int e, int r, std::vector<int>* states) {
    const Mat& me = est.means[e];
    const Mat& mr = truth.means[r];
    Mat c(me.rows(), mr.rows());
    for (Eigen::Index i = 0; i < me.rows(); ++i)
      for (Eigen::Index j = 0; j < mr.rows(); ++j)
        c(i, j) = (me.row(i) - mr.row(j)).squaredNorm();
    const std::vector<int> perm = munkres_assign(c);
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c(static_cast<Eigen::Index>(i), perm[i]);
    if (states) *states = perm;
    return s;
  };

  MeanAlignment out;
  if (chain_perm.empty()) {
    double big = 1.0;
    Mat c(M, M);
    for (int e = 0; e < M; ++e)
      for (int r = 0; r < M; ++r)
        if (est.state_counts[e] == truth.state_counts[r]) {
          c(e, r) = pair_cost(e, r, nullptr);
          big = std::max(big, c(e, r));
        } else {
          c(e, r) = -1.0;
        }
    // Shape-incompatible pairs get a cost no feasible matching can beat.
    c = c.unaryExpr([&](double x) { return x < 0.0 ? big * 4.0 * M : x; });
    out.chain_perm = munkres_assign(c);
  } else {
    require(static_cast<int>(chain_perm.size()) == M, "mse_means: bad chain permutation");
    std::vector<int> seen(M, 0);
    for (int r : chain_perm) {
      require(r >= 0 && r < M && !seen[r], "mse_means: chain permutation is not a bijection");
      seen[r] = 1;
    }
    out.chain_perm = chain_perm;
  }

  double total = 0.0;
  int n = 0;
  out.state_perm.resize(M);
  for (int e = 0; e < M; ++e) {
    const int r = out.chain_perm[e];
    require(est.state_counts[e] == truth.state_counts[r],
            "mse_means: matched chains have different state counts");
    total += pair_cost(e, r, &out.state_perm[e]);
    n += est.state_counts[e];
  }
  out.mse = total / n;
  return out;
}

std::vector<std::uint64_t> trial_seeds(std::uint64_t base_seed, int trials) {
  require(trials >= 1, "trials must be >= 1");
  std::vector<std::uint64_t> seeds(trials);
  for (int i = 0; i < trials; ++i)
    seeds[i] = mix_seed(base_seed * 0x100000001b3ULL + static_cast<std::uint64_t>(i));
  return seeds;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (n <= 0) return;
  jobs = std::clamp(jobs, 1, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

MonteCarloSummary monte_carlo(const std::function<TrialMetrics(std::uint64_t)>& run,
                              const std::vector<std::uint64_t>& seeds, int jobs) {
  require(!seeds.empty(), "monte_carlo needs at least one trial");
  const int n = static_cast<int>(seeds.size());
  std::vector<TrialMetrics> results(n);
  std::vector<std::string> errors(n);
  std::vector<char> ok(n, 0);
  parallel_for(n, jobs, [&](int i) {
    try {
      results[i] = run(seeds[i]);
      ok[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  MonteCarloSummary s;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++s.failures;
      s.failure_messages.push_back("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
      continue;
    }
    s.trials.push_back(results[i]);
  }
  if (s.trials.empty())
    fail(ErrorKind::kNumerical, "all " + std::to_string(n) + " trials failed; first: " +
                                    s.failure_messages.front());

  for (const TrialMetrics& tm : s.trials)
    for (const auto& [name, value] : tm) {
      MetricSummary& m = s.metrics[name];
      ++m.count;
      m.mean += value;
    }
  for (auto& [name, m] : s.metrics) m.mean /= m.count;
  for (const TrialMetrics& tm : s.trials)
    for (const auto& [name, value] : tm) {
      MetricSummary& m = s.metrics[name];
      m.std += (value - m.mean) * (value - m.mean);
    }
  for (auto& [name, m] : s.metrics)
    m.std = m.count > 1 ? std::sqrt(m.std / (m.count - 1)) : 0.0;
  return s;
}

}  // namespace ihmp
