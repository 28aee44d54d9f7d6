#include "ihmp/baselines.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <numeric>
#include <set>
#include <thread>

#include <Eigen/Eigenvalues>

#include "ihmp/chain_smoother.hpp"

namespace ihmp {

// ---- clustering -------------------------------------------------------------

std::vector<int> nearest_labels(const Mat& data, const Mat& centers) {
  require(data.cols() == centers.cols(), "dimension mismatch");
  std::vector<int> labels(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    Eigen::Index best = 0;
    (centers.rowwise() - data.row(t)).rowwise().squaredNorm().minCoeff(&best);
    labels[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return labels;
}

namespace {

std::size_t distinct_rows(const Mat& data) {
  std::set<std::vector<double>> rows;
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    std::vector<double> r(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index d = 0; d < data.cols(); ++d) r[d] = data(t, d);
    rows.insert(std::move(r));
  }
  return rows.size();
}

}  // namespace

Codebook kmeans(const Mat& data, int k, Rng& rng, int max_iter, int restarts) {
  require(restarts >= 1, "restarts must be >= 1");
  Codebook best = kmeans_once(data, k, rng, max_iter);
  for (int r = 1; r < restarts; ++r) {
    Codebook cb = kmeans_once(data, k, rng, max_iter);
    if (cb.inertia < best.inertia) best = std::move(cb);
  }
  return best;
}

Codebook kmeans_once(const Mat& data, int k, Rng& rng, int max_iter) {
  require(k >= 1, "k must be >= 1");
  const auto T = data.rows();
  require(T >= 1, "no data to cluster");
  if (distinct_rows(data) < static_cast<std::size_t>(k))
    fail(ErrorKind::kInvalidArgument,
         "k=" + std::to_string(k) + " exceeds the number of distinct observations");

  Codebook cb;
  cb.centers.resize(k, data.cols());
  cb.centers.row(0) = data.row(rng.uniform_int(0, static_cast<int>(T) - 1));
  Vec d2 = (data.rowwise() - cb.centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const int pick = rng.categorical(d2);
    cb.centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - cb.centers.row(c)).rowwise().squaredNorm());
  }

  cb.labels.assign(static_cast<std::size_t>(T), -1);
  for (int it = 0; it < max_iter; ++it) {
    const std::vector<int> next = nearest_labels(data, cb.centers);
    const bool same = next == cb.labels;
    cb.labels = next;
    if (same) break;
    Mat sum = Mat::Zero(k, data.cols());
    Vec cnt = Vec::Zero(k);
    for (Eigen::Index t = 0; t < T; ++t) {
      sum.row(cb.labels[t]) += data.row(t);
      cnt(cb.labels[t]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (cnt(c) > 0.0) {
        cb.centers.row(c) = sum.row(c) / cnt(c);
        continue;
      }
      // Empty cluster: move it to the point farthest from its center.
      Eigen::Index far = 0;
      Vec dist(T);
      for (Eigen::Index t = 0; t < T; ++t)
        dist(t) = (data.row(t) - cb.centers.row(cb.labels[t])).squaredNorm();
      dist.maxCoeff(&far);
      cb.centers.row(c) = data.row(far);
      cb.labels[far] = c;
    }
  }
  cb.inertia = 0.0;
  for (Eigen::Index t = 0; t < T; ++t)
    cb.inertia += (data.row(t) - cb.centers.row(cb.labels[t])).squaredNorm();
  return cb;
}

// ---- GMM / HMM ---------------------------------------------------------------

namespace {

constexpr double kCollapseVar = 1e-10;
constexpr double kFloor = 1e-12;

Mat data_cov(const Mat& data) {
  const Mat c = data.rowwise() - data.colwise().mean();
  Mat cov = c.transpose() * c / static_cast<double>(data.rows());
  cov.diagonal().array() += 1e-12;
  return cov;
}

// Weighted covariance around `mean`; nullopt when it has collapsed.
std::optional<Mat> weighted_cov(const Mat& data, const Vec& w, const Vec& mean) {
  const Mat c = data.rowwise() - mean.transpose();
  const Mat cov = c.transpose() * w.asDiagonal() * c / w.sum();
  Eigen::SelfAdjointEigenSolver<Mat> es(cov, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() >= kCollapseVar)) return std::nullopt;
  return Mat(0.5 * (cov + cov.transpose()));
}

Mat log_densities(const Mat& data, const Mat& means, const std::vector<Mat>& covs) {
  const auto k = means.rows();
  Mat out(data.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const GaussianKernel g(covs[static_cast<std::size_t>(c)]);
    for (Eigen::Index t = 0; t < data.rows(); ++t)
      out(t, c) = g.log_density(data.row(t).transpose(), means.row(c).transpose());
  }
  return out;
}

struct ComponentUpdate {
  Mat means;
  std::vector<Mat> covs;
};

// Weighted mean / covariance per column of `resp`; a collapsed component is
// re-seeded once at a random observation, a second collapse is an error.
ComponentUpdate update_components(const Mat& data, const Mat& resp, Rng& rng,
                                  std::vector<int>& reseeded,
                                  const ComponentUpdate& prev) {
  ComponentUpdate u = prev;
  for (Eigen::Index c = 0; c < resp.cols(); ++c) {
    const Vec w = resp.col(c);
    const double n = w.sum();
    std::optional<Mat> cov;
    if (n > kFloor) {
      u.means.row(c) = (w.transpose() * data) / n;
      cov = weighted_cov(data, w, u.means.row(c).transpose());
    }
    if (cov) {
      u.covs[c] = *cov;
      continue;
    }
    if (reseeded[c]++ > 0)
      fail(ErrorKind::kNumerical,
           "component " + std::to_string(c + 1) + " collapsed (variance < 1e-10)");
    u.means.row(c) = data.row(rng.uniform_int(0, static_cast<int>(data.rows()) - 1));
    u.covs[c] = data_cov(data);
  }
  return u;
}

bool rel_converged(const std::vector<double>& trace, double tol) {
  const auto n = trace.size();
  if (n < 2) return false;
  return std::abs(trace[n - 1] - trace[n - 2]) <
         tol * std::max(std::abs(trace[n - 2]), 1.0);
}

ComponentUpdate seed_components(const Mat& data, int k, Rng& rng) {
  Codebook cb = kmeans(data, k, rng);
  ComponentUpdate u;
  u.means = cb.centers;
  const Mat fallback = data_cov(data);
  for (int c = 0; c < k; ++c) {
    Vec w = Vec::Zero(data.rows());
    for (Eigen::Index t = 0; t < data.rows(); ++t)
      if (cb.labels[t] == c) w(t) = 1.0;
    auto cov = w.sum() > 1.0 ? weighted_cov(data, w, cb.centers.row(c).transpose())
                             : std::nullopt;
    u.covs.push_back(cov ? *cov : fallback);
  }
  return u;
}

std::vector<int> row_argmax(const Mat& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
      if (m(t, c) > m(t, best)) best = c;
    out[t] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

GmmResult gmm_fit(const Mat& data, int k, std::uint64_t seed, int max_iter,
                  double tol) {
  require(k >= 1, "num_components must be >= 1");
  require(max_iter >= 1, "max_iter must be >= 1");
  Rng rng(seed);
  ComponentUpdate comp = seed_components(data, k, rng);
  Vec weights = Vec::Constant(k, 1.0 / k);
  std::vector<int> reseeded(static_cast<std::size_t>(k), 0);

  GmmResult r;
  Mat resp;
  for (int it = 0; it < max_iter; ++it) {
    Mat ld = log_densities(data, comp.means, comp.covs);
    ld.rowwise() += weights.array().log().matrix().transpose();
    double ll = 0.0;
    resp.resize(ld.rows(), k);
    for (Eigen::Index t = 0; t < ld.rows(); ++t) {
      const double z = log_sum_exp(Vec(ld.row(t).transpose()));
      ll += z;
      resp.row(t) = (ld.row(t).array() - z).exp();
    }
    if (!std::isfinite(ll)) fail(ErrorKind::kNumerical, "GMM log-likelihood not finite");
    r.log_likelihood_trace.push_back(ll);
    r.iterations = it + 1;
    if (rel_converged(r.log_likelihood_trace, tol)) {
      r.converged = true;
      break;
    }
    if (it + 1 == max_iter) break;
    weights = (resp.colwise().sum().transpose() / static_cast<double>(data.rows()))
                  .cwiseMax(kFloor);
    weights /= weights.sum();
    comp = update_components(data, resp, rng, reseeded, comp);
  }
  r.weights = weights;
  r.means = comp.means;
  r.covs = comp.covs;
  r.responsibilities = resp;
  r.labels = row_argmax(resp);
  return r;
}

HmmResult hmm_fit(const Mat& data, int k, std::uint64_t seed, int max_iter,
                  double tol) {
  require(k >= 1, "num_states must be >= 1");
  require(max_iter >= 1, "max_iter must be >= 1");
  Rng rng(seed);
  ComponentUpdate comp = seed_components(data, k, rng);
  Vec init = Vec::Constant(k, 1.0 / k);
  Mat trans(k, k);
  for (int i = 0; i < k; ++i) trans.row(i) = rng.dirichlet(k, 5.0).transpose();
  std::vector<int> reseeded(static_cast<std::size_t>(k), 0);

  HmmResult r;
  ChainPosterior post;
  for (int it = 0; it < max_iter; ++it) {
    const Mat ld = log_densities(data, comp.means, comp.covs);
    post = smooth_chain(floored_log(init), ld, floored_log(trans));
    const double ll = post.log_norm;
    if (!std::isfinite(ll)) fail(ErrorKind::kNumerical, "HMM log-likelihood not finite");
    r.log_likelihood_trace.push_back(ll);
    r.iterations = it + 1;
    if (rel_converged(r.log_likelihood_trace, tol)) {
      r.converged = true;
      break;
    }
    if (it + 1 == max_iter) break;
    init = post.node.row(0).transpose().cwiseMax(kFloor);
    init /= init.sum();
    Mat counts = Mat::Zero(k, k);
    for (int t = 1; t < post.length(); ++t) counts += post.pair[t];
    for (int i = 0; i < k; ++i) {
      if (counts.row(i).sum() < kFloor) continue;
      Vec row = counts.row(i).transpose() / counts.row(i).sum();
      row = row.cwiseMax(kFloor);
      trans.row(i) = (row / row.sum()).transpose();
    }
    comp = update_components(data, post.node, rng, reseeded, comp);
  }
  r.init = init;
  r.trans = trans;
  r.means = comp.means;
  r.covs = comp.covs;
  r.marginals = post.node;
  r.labels = row_argmax(post.node);
  return r;
}

// ---- IMP cost ----------------------------------------------------------------

int canonicalize(Partition& p) {
  std::vector<int> map;
  int next = 0;
  for (int& b : p) {
    require(b >= 0, "block labels must be non-negative");
    if (static_cast<std::size_t>(b) >= map.size()) map.resize(b + 1, -1);
    if (map[b] < 0) map[b] = next++;
    b = map[b];
  }
  return next;
}

double imp_kappa(const Partition& partition) {
  Partition p = partition;
  const int B = canonicalize(p);
  std::vector<double> size(static_cast<std::size_t>(B), 0.0);
  for (int b : p) size[b] += 1.0;
  double k = static_cast<double>(B) * (B - 1);
  for (double s : size) k += s * (s - 1.0);
  return k;
}

namespace {

// sum over observed transitions of n(a,c) log(n(a,c) / n(a,.))
double transition_loglik(const std::vector<double>& counts, int n) {
  double ll = 0.0;
  for (int a = 0; a < n; ++a) {
    double row = 0.0;
    for (int c = 0; c < n; ++c) row += counts[a * n + c];
    if (row <= 0.0) continue;
    for (int c = 0; c < n; ++c) {
      const double x = counts[a * n + c];
      if (x > 0.0) ll += x * std::log(x / row);
    }
  }
  return ll;
}

}  // namespace

double imp_entropy(const std::vector<int>& symbols, const Partition& partition) {
  require(!symbols.empty(), "symbol sequence is empty");
  Partition p = partition;
  const int B = canonicalize(p);
  const int A = static_cast<int>(p.size());
  std::vector<int> block_size(static_cast<std::size_t>(B), 0);
  for (int b : p) ++block_size[b];

  std::vector<double> sw(static_cast<std::size_t>(B) * B, 0.0);
  std::vector<double> sub(static_cast<std::size_t>(A) * A, 0.0);
  std::vector<int> last(static_cast<std::size_t>(B), -1);
  double ll = 0.0;
  int prev_block = -1;
  for (int x : symbols) {
    if (x < 0 || x >= A)
      fail(ErrorKind::kInvalidArgument,
           "symbol " + std::to_string(x) + " is not covered by the partition");
    const int b = p[x];
    if (prev_block < 0) ll -= std::log(static_cast<double>(B));
    else sw[prev_block * B + b] += 1.0;
    prev_block = b;
    if (last[b] < 0) ll -= std::log(static_cast<double>(block_size[b]));
    else sub[last[b] * A + x] += 1.0;
    last[b] = x;
  }
  ll += transition_loglik(sw, B) + transition_loglik(sub, A);
  return -ll / static_cast<double>(symbols.size());
}

double imp_penalized_cost(const std::vector<int>& symbols,
                          const Partition& partition, double beta) {
  require(beta >= 0.0, "beta must be >= 0");
  const double n = static_cast<double>(symbols.size());
  return imp_entropy(symbols, partition) + beta * imp_kappa(partition) * std::log(n + 1.0);
}

// ---- GA ------------------------------------------------------------------------

namespace {

Partition random_partition(int A, Rng& rng) {
  const int B = rng.uniform_int(1, A);
  Partition p(static_cast<std::size_t>(A));
  for (int& b : p) b = rng.uniform_int(0, B - 1);
  canonicalize(p);
  return p;
}

void mutate(Partition& p, Rng& rng) {
  const int blocks = *std::max_element(p.begin(), p.end()) + 1;
  const int s = rng.uniform_int(0, static_cast<int>(p.size()) - 1);
  p[s] = rng.uniform_int(0, blocks);  // `blocks` opens a new block
  canonicalize(p);
}

// Keeps a random subset of a's blocks intact; the rest of the symbols take
// b's grouping.
Partition cross(const Partition& a, const Partition& b, Rng& rng) {
  const int ba = *std::max_element(a.begin(), a.end()) + 1;
  std::vector<char> keep(static_cast<std::size_t>(ba));
  for (auto& k : keep) k = rng.uniform() < 0.5;
  Partition child(a.size());
  for (std::size_t s = 0; s < a.size(); ++s)
    child[s] = keep[a[s]] ? a[s] : ba + b[s];
  canonicalize(child);
  return child;
}

template <typename F>
void parallel_for_each(std::size_t n, int jobs, F f) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

GaResult ga_partition_search(const std::vector<int>& symbols, int alphabet,
                             const GaOptions& o) {
  require(alphabet >= 1 && alphabet <= 20, "GA alphabet size must be in [1, 20]");
  require(o.population >= 1, "population must be >= 1");
  require(o.generations >= 0, "generations must be >= 0");
  Rng rng(o.seed);
  const auto pop_n = static_cast<std::size_t>(o.population);

  struct Member {
    Partition genome;
    double cost;
  };
  std::vector<Member> pop(pop_n);
  for (auto& m : pop) m.genome = random_partition(alphabet, rng);
  parallel_for_each(pop_n, o.jobs, [&](std::size_t i) {
    pop[i].cost = imp_penalized_cost(symbols, pop[i].genome, o.beta);
  });
  auto by_cost = [](const Member& a, const Member& b) { return a.cost < b.cost; };
  std::stable_sort(pop.begin(), pop.end(), by_cost);

  auto tournament = [&]() -> const Member& {
    const auto& a = pop[static_cast<std::size_t>(rng.uniform_int(0, o.population - 1))];
    const auto& b = pop[static_cast<std::size_t>(rng.uniform_int(0, o.population - 1))];
    return a.cost <= b.cost ? a : b;
  };

  GaResult r;
  int last_improve = 0;
  for (int g = 0; g < o.generations; ++g) {
    std::vector<Member> kids(pop_n);
    for (auto& kid : kids) {
      const Member& p1 = tournament();
      bool changed = false;
      if (o.crossover && o.population > 1 && rng.uniform() < o.crossover_rate) {
        kid.genome = cross(p1.genome, tournament().genome, rng);
        changed = true;
      } else {
        kid.genome = p1.genome;
      }
      if (!changed || rng.uniform() < o.mutation_rate) mutate(kid.genome, rng);
    }
    parallel_for_each(pop_n, o.jobs, [&](std::size_t i) {
      kids[i].cost = imp_penalized_cost(symbols, kids[i].genome, o.beta);
    });
    const double before = pop.front().cost;
    pop.insert(pop.end(), kids.begin(), kids.end());
    std::stable_sort(pop.begin(), pop.end(), by_cost);
    pop.resize(pop_n);
    if (pop.front().cost < before) last_improve = g;
    r.cost_trace.push_back(pop.front().cost);
  }
  r.best = pop.front().genome;
  r.best_cost = pop.front().cost;
  r.converged = o.generations == 0 || o.generations - last_improve > o.generations / 4;
  return r;
}

Partition best_sized_partition(const std::vector<int>& symbols,
                               const std::vector<int>& sizes, Rng& rng) {
  const int A = std::accumulate(sizes.begin(), sizes.end(), 0);
  const int B = static_cast<int>(sizes.size());
  require(B >= 1, "need at least one block");
  for (int s : sizes) require(s >= 1, "block sizes must be >= 1");

  // Number of labelled assignments A! / prod(size!), capped.
  double count = 1.0;
  {
    int placed = 0;
    for (int s : sizes)
      for (int i = 1; i <= s; ++i) count *= static_cast<double>(++placed) / i;
  }

  // Evaluated with the block labels as given so sizes stay attached.
  auto cost = [&](const Partition& p) { return imp_entropy(symbols, p); };

  if (count <= 5000.0) {
    Partition cur(static_cast<std::size_t>(A)), best;
    std::vector<int> left = sizes;
    double best_cost = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, int s) -> void {
      if (s == A) {
        const double c = cost(cur);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          best = cur;
        }
        return;
      }
      for (int b = 0; b < B; ++b) {
        if (left[b] == 0) continue;
        --left[b];
        cur[s] = b;
        self(self, s + 1);
        ++left[b];
      }
    };
    rec(rec, 0);
    return best;
  }

  Partition cur;
  for (int b = 0; b < B; ++b) cur.insert(cur.end(), sizes[b], b);
  std::shuffle(cur.begin(), cur.end(), rng.engine());
  double cur_cost = cost(cur);
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (int a = 0; a < A; ++a)
      for (int c = a + 1; c < A; ++c) {
        if (cur[a] == cur[c]) continue;
        std::swap(cur[a], cur[c]);
        const double nc = cost(cur);
        if (nc < cur_cost - 1e-12) {
          cur_cost = nc;
          improved = true;
        } else {
          std::swap(cur[a], cur[c]);
        }
      }
    if (!improved) break;
  }
  return cur;
}

GaLabeling ga_label(const Mat& data, int codebook_size, const GaOptions& o) {
  Rng rng = Rng(o.seed).split(0xc0de);
  GaLabeling out;
  out.codebook = kmeans(data, codebook_size, rng);
  out.search = ga_partition_search(out.codebook.labels, codebook_size, o);
  out.labels.resize(out.codebook.labels.size());
  for (std::size_t t = 0; t < out.labels.size(); ++t)
    out.labels[t] = out.search.best[out.codebook.labels[t]];
  return out;
}

}  // namespace ihmp
