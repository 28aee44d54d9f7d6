#include <algorithm>
#include <map>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ihmp/baselines.hpp"
#include "ihmp/inference.hpp"

#include "variational_common.hpp"

namespace ihmp {

namespace {

constexpr double kEstimateFloor = 1e-12;
constexpr double kEmptyCount = 1e-12;

// Floors and renormalizes an expected-count vector; returns false when the
// total mass is too small to define a distribution.
bool normalize_counts(Vec& v) {
  const double s = v.sum();
  if (!(s >= kEmptyCount)) return false;
  v /= s;
  v = v.cwiseMax(kEstimateFloor);
  v /= v.sum();
  return true;
}

Mat row_normalize(const Mat& counts, const Mat& prev) {
  Mat out = prev;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    Vec row = counts.row(r).transpose();
    if (normalize_counts(row)) out.row(r) = row.transpose();
  }
  return out;
}

double data_variance(const ObservationSequence& obs) {
  const Vec mean = obs.values.colwise().mean().transpose();
  const Mat centered = obs.values.rowwise() - mean.transpose();
  return centered.squaredNorm() / (static_cast<double>(obs.length()) * obs.dim());
}

Mat sample_covariance(const ObservationSequence& obs) {
  const Vec mean = obs.values.colwise().mean().transpose();
  const Mat centered = obs.values.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(obs.length());
}

// Raises eigenvalues below `floor` to `floor`; leaves the matrix untouched
// when it is already above the floor.
Mat floor_covariance(const Mat& cov, double floor) {
  const Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const Vec ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kExact: return "em";
    case Algorithm::kMfvi: return "mfvi";
    case Algorithm::kSvi: return "svi";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "em" || name == "exact") return Algorithm::kExact;
  if (name == "mfvi") return Algorithm::kMfvi;
  if (name == "svi") return Algorithm::kSvi;
  fail(ErrorKind::kInvalidArgument, "unknown algorithm '" + name + "'");
}

ModelParams random_init(const ObservationSequence& obs,
                        const std::vector<int>& state_counts, Rng& rng,
                        double concentration) {
  require(obs.length() >= 1, "observation sequence is empty");
  require(!state_counts.empty(), "need at least one chain");
  for (int k : state_counts) require(k >= 1, "state counts must be >= 1");
  const int D = obs.dim();
  ModelParams p = ModelParams::uniform(state_counts, D);
  const int M = p.num_chains();

  const Vec lo = obs.values.colwise().minCoeff().transpose();
  const Vec hi = obs.values.colwise().maxCoeff().transpose();
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < state_counts[m]; ++i)
      for (int d = 0; d < D; ++d) p.means[m](i, d) = rng.uniform(lo(d), hi(d));
    for (int i = 0; i < state_counts[m]; ++i)
      p.chain_trans[m].row(i) = rng.dirichlet(state_counts[m], concentration).transpose();
  }
  for (int i = 0; i < M; ++i)
    p.switch_trans.row(i) = rng.dirichlet(M, concentration).transpose();

  const double var = data_variance(obs);
  p.shared_cov = floor_covariance(sample_covariance(obs), std::max(var, 1.0) * 1e-6);
  return p;
}

ModelParams codebook_init(const ObservationSequence& obs,
                          const std::vector<int>& state_counts, Rng& rng,
                          double concentration) {
  ModelParams p = random_init(obs, state_counts, rng, concentration);
  const int M = p.num_chains();
  const int N = p.total_symbols();
  const Codebook cb = kmeans(obs.values, N, rng, 100, 10);
  const Partition chain_of = best_sized_partition(cb.labels, state_counts, rng);

  std::vector<int> next(static_cast<std::size_t>(M), 0);
  for (int c = 0; c < N; ++c) {
    const int m = chain_of[c];
    p.means[m].row(next[m]++) = cb.centers.row(c);
  }
  Mat scatter = Mat::Zero(obs.dim(), obs.dim());
  for (int t = 0; t < obs.length(); ++t) {
    const Vec d = (obs.values.row(t) - cb.centers.row(cb.labels[t])).transpose();
    scatter += d * d.transpose();
  }
  p.shared_cov = floor_covariance(scatter / obs.length(),
                                  1e-6 * std::max(data_variance(obs), 1e-12));
  return p;
}

ModelParams shared_codebook_init(const ObservationSequence& obs,
                                 const std::vector<int>& state_counts, Rng& rng,
                                 double concentration) {
  ModelParams p = random_init(obs, state_counts, rng, concentration);
  const int kmax = *std::max_element(state_counts.begin(), state_counts.end());
  std::map<int, Codebook> books;
  for (int k : state_counts)
    if (!books.count(k)) books.emplace(k, kmeans(obs.values, k, rng, 100, 10));
  for (int m = 0; m < p.num_chains(); ++m) p.means[m] = books.at(state_counts[m]).centers;

  const Codebook& cb = books.at(kmax);
  Mat scatter = Mat::Zero(obs.dim(), obs.dim());
  for (int t = 0; t < obs.length(); ++t) {
    const Vec d = (obs.values.row(t) - cb.centers.row(cb.labels[t])).transpose();
    scatter += d * d.transpose();
  }
  p.shared_cov = floor_covariance(scatter / obs.length(),
                                  1e-6 * std::max(data_variance(obs), 1e-12));
  return p;
}

ModelParams initial_params(const ObservationSequence& obs,
                           const std::vector<int>& state_counts,
                           const FitOptions& options) {
  require(obs.length() >= 1, "observation sequence is empty");
  if (options.init) {
    const ModelParams& p = *options.init;
    ensure_valid(p);
    require(p.state_counts == state_counts, "initial parameters have wrong K");
    require(p.obs_dim == obs.dim(), "initial parameters have wrong dimension");
    return p;
  }
  Rng rng = Rng(options.seed).split(0x1a17);
  if (options.init_strategy != InitStrategy::kRandom) {
    try {
      if (options.init_strategy == InitStrategy::kSharedCodebook)
        return shared_codebook_init(obs, state_counts, rng, options.init_concentration);
      return codebook_init(obs, state_counts, rng, options.init_concentration);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInvalidArgument) throw;
      // Fewer distinct observations than symbols: fall through.
    }
  }
  return random_init(obs, state_counts, rng, options.init_concentration);
}

Mat pseudo_inverse(const Mat& a, double rel_tol) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cut = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

ModelParams m_step(const SufficientStats& s, const ObservationSequence& obs,
                   const ModelParams& prev, double cov_floor_rel) {
  ModelParams p = prev;
  const int M = prev.num_chains();
  const int T = obs.length();
  const int D = obs.dim();

  Vec first = s.switch_first;
  if (normalize_counts(first)) p.switch_init = first;
  p.switch_trans = row_normalize(s.switch_counts, prev.switch_trans);
  for (int m = 0; m < M; ++m) {
    Vec cf = s.chain_first[m];
    if (normalize_counts(cf)) p.chain_init[m] = cf;
    p.chain_trans[m] = row_normalize(s.chain_counts[m], prev.chain_trans[m]);
  }

  // Normal equations for all symbol means at once. Every observation is
  // explained by exactly one symbol, so the Gram matrix is diagonal.
  const int N = prev.total_symbols();
  Mat R(T, N);
  for (int m = 0, c = 0; m < M; c += prev.state_counts[m], ++m)
    R.middleCols(c, prev.state_counts[m]) = s.resp[m];
  const Vec occupancy = R.colwise().sum().transpose();
  const Mat gram = occupancy.asDiagonal();
  const Mat mu = pseudo_inverse(gram) * (R.transpose() * obs.values);
  for (int m = 0, c = 0; m < M; c += prev.state_counts[m], ++m)
    for (int k = 0; k < prev.state_counts[m]; ++k)
      if (occupancy(c + k) >= kEmptyCount) p.means[m].row(k) = mu.row(c + k);

  Mat scatter = Mat::Zero(D, D);
  double weight = 0.0;
  for (int m = 0, c = 0; m < M; c += prev.state_counts[m], ++m)
    for (int k = 0; k < prev.state_counts[m]; ++k) {
      const Mat diff = obs.values.rowwise() - p.means[m].row(k);
      scatter += diff.transpose() * R.col(c + k).asDiagonal() * diff;
      weight += occupancy(c + k);
    }
  if (weight >= kEmptyCount) {
    const double floor = cov_floor_rel * std::max(data_variance(obs), 1e-12);
    p.shared_cov = floor_covariance(scatter / weight, floor);
  }

  if (!p.shared_cov.allFinite() || !p.switch_trans.allFinite())
    fail(ErrorKind::kNumerical, "M-step produced non-finite parameters");
  for (int m = 0; m < M; ++m)
    if (!p.means[m].allFinite() || !p.chain_trans[m].allFinite())
      fail(ErrorKind::kNumerical, "M-step produced non-finite parameters");
  return p;
}

int argmax_first(const Eigen::Ref<const Vec>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

void decode(InferenceResult& r) {
  const auto T = r.switch_marginals.rows();
  r.decoded_source.resize(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t)
    r.decoded_source[static_cast<std::size_t>(t)] =
        argmax_first(r.switch_marginals.row(t).transpose());
  r.decoded_states.assign(r.state_marginals.size(), {});
  for (std::size_t m = 0; m < r.state_marginals.size(); ++m) {
    const Mat& sm = r.state_marginals[m];
    auto& out = r.decoded_states[m];
    out.resize(static_cast<std::size_t>(sm.rows()));
    for (Eigen::Index t = 0; t < sm.rows(); ++t)
      out[static_cast<std::size_t>(t)] = argmax_first(sm.row(t).transpose());
  }
}

namespace detail {

InferenceResult best_of_restarts(
    const FitOptions& opt, const std::function<InferenceResult(const FitOptions&)>& once) {
  require(opt.restarts >= 1, "restarts must be >= 1");
  const int n = opt.init ? 1 : opt.restarts;
  std::vector<InitStrategy> strategies = {opt.init_strategy};
  if (opt.init_strategy == InitStrategy::kAuto)
    strategies = {InitStrategy::kCodebook, InitStrategy::kSharedCodebook};
  InferenceResult best;
  bool have = false;
  for (int r = 0; r < n; ++r) {
    for (InitStrategy s : strategies) {
      FitOptions o = opt;
      o.init_strategy = s;
      if (r > 0) o.seed = mix_seed(opt.seed + static_cast<std::uint64_t>(r));
      InferenceResult cur = once(o);
      if (!have || cur.objective_trace.back() > best.objective_trace.back()) {
        best = std::move(cur);
        have = true;
      }
      if (opt.init) break;
    }
  }
  return best;
}

}  // namespace detail

InferenceResult fit(Algorithm algorithm, const ObservationSequence& obs,
                    const std::vector<int>& state_counts,
                    const FitOptions& options) {
  switch (algorithm) {
    case Algorithm::kExact: return em_fit(obs, state_counts, options);
    case Algorithm::kMfvi: return mfvi_fit(obs, state_counts, options);
    case Algorithm::kSvi: return svi_fit(obs, state_counts, options);
  }
  fail(ErrorKind::kInvalidArgument, "unknown algorithm");
}

}  // namespace ihmp
