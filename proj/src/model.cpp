#include "ihmp/model.hpp"

#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace ihmp {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void check_simplex(const Vec& v, const std::string& name,
                   std::vector<std::string>& out) {
  if ((v.array() < 0.0).any()) out.push_back(name + " has negative entries");
  if (!v.allFinite()) out.push_back(name + " has non-finite entries");
  const double s = v.sum();
  if (std::abs(s - 1.0) > kStochasticTol)
    out.push_back(name + " sums to " + fmt_double(s));
}

void check_stochastic(const Mat& m, const std::string& name,
                      std::vector<std::string>& out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    check_simplex(m.row(r).transpose(),
                  "row " + std::to_string(r + 1) + " of " + name, out);
}

}  // namespace

int ModelParams::total_symbols() const {
  int n = 0;
  for (int k : state_counts) n += k;
  return n;
}

ModelParams ModelParams::uniform(std::vector<int> state_counts, int obs_dim) {
  ModelParams p;
  const int M = static_cast<int>(state_counts.size());
  p.state_counts = std::move(state_counts);
  p.obs_dim = obs_dim;
  p.switch_init = Vec::Constant(M, 1.0 / M);
  p.switch_trans = Mat::Constant(M, M, 1.0 / M);
  for (int K : p.state_counts) {
    p.chain_init.push_back(Vec::Constant(K, 1.0 / K));
    p.chain_trans.push_back(Mat::Constant(K, K, 1.0 / K));
    p.means.push_back(Mat::Zero(K, obs_dim));
  }
  p.shared_cov = Mat::Identity(obs_dim, obs_dim);
  return p;
}

ObservationSequence ObservationSequence::from_scalars(
    const std::vector<double>& xs) {
  ObservationSequence o;
  o.values.resize(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i)
    o.values(static_cast<Eigen::Index>(i), 0) = xs[i];
  return o;
}

std::vector<int> LatentTrajectory::active_states() const {
  std::vector<int> out(switch_labels.size());
  for (std::size_t t = 0; t < switch_labels.size(); ++t)
    out[t] = states[static_cast<std::size_t>(switch_labels[t])][t];
  return out;
}

std::vector<std::string> validate(const ModelParams& p) {
  std::vector<std::string> out;
  const int M = p.num_chains();
  if (M < 1) {
    out.push_back("num_chains must be >= 1");
    return out;
  }
  if (p.obs_dim < 1) out.push_back("obs_dim must be >= 1");
  for (int m = 0; m < M; ++m)
    if (p.state_counts[m] < 1)
      out.push_back("state count of chain " + std::to_string(m + 1) +
                    " must be >= 1");
  if (!out.empty()) return out;

  if (p.switch_init.size() != M)
    out.push_back("pi^z has length " + std::to_string(p.switch_init.size()) +
                  ", expected " + std::to_string(M));
  else
    check_simplex(p.switch_init, "pi^z", out);

  if (p.switch_trans.rows() != M || p.switch_trans.cols() != M)
    out.push_back("A^z must be " + std::to_string(M) + "x" + std::to_string(M));
  else
    check_stochastic(p.switch_trans, "A^z", out);

  if (static_cast<int>(p.chain_init.size()) != M ||
      static_cast<int>(p.chain_trans.size()) != M ||
      static_cast<int>(p.means.size()) != M) {
    out.push_back("per-chain parameter lists must have num_chains entries");
    return out;
  }

  int n_means = 0;
  for (int m = 0; m < M; ++m) {
    const int K = p.state_counts[m];
    const std::string tag = std::to_string(m + 1);
    if (p.chain_init[m].size() != K)
      out.push_back("pi^" + tag + " has wrong length");
    else
      check_simplex(p.chain_init[m], "pi^" + tag, out);
    if (p.chain_trans[m].rows() != K || p.chain_trans[m].cols() != K)
      out.push_back("A^" + tag + " has wrong shape");
    else
      check_stochastic(p.chain_trans[m], "A^" + tag, out);
    if (p.means[m].cols() != p.obs_dim)
      out.push_back("means of chain " + tag + " have wrong dimension");
    if (!p.means[m].allFinite())
      out.push_back("means of chain " + tag + " are not finite");
    n_means += static_cast<int>(p.means[m].rows());
  }
  if (n_means != p.total_symbols())
    out.push_back("number of mean vectors " + std::to_string(n_means) +
                  " != sum of K^m " + std::to_string(p.total_symbols()));

  const Mat& S = p.shared_cov;
  if (S.rows() != p.obs_dim || S.cols() != p.obs_dim) {
    out.push_back("Sigma must be DxD");
  } else if (!S.allFinite()) {
    out.push_back("Sigma has non-finite entries");
  } else {
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > kStochasticTol)
      out.push_back("Sigma not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()),
                                          Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      out.push_back("Sigma not positive-definite");
  }
  return out;
}

void ensure_valid(const ModelParams& params) {
  const auto v = validate(params);
  if (v.empty()) return;
  std::string msg = "invalid model parameters:";
  for (const auto& s : v) msg += "\n  - " + s;
  fail(ErrorKind::kInvalidArgument, msg);
}

void renormalize(ModelParams& p) {
  auto fix_vec = [](Vec& v) {
    const double s = v.sum();
    if ((v.array() >= 0.0).all() && std::abs(s - 1.0) <= kStochasticTol)
      v /= s;
  };
  auto fix_mat = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      Vec row = m.row(r).transpose();
      fix_vec(row);
      m.row(r) = row.transpose();
    }
  };
  fix_vec(p.switch_init);
  fix_mat(p.switch_trans);
  for (auto& v : p.chain_init) fix_vec(v);
  for (auto& m : p.chain_trans) fix_mat(m);
  if (p.shared_cov.rows() == p.shared_cov.cols() &&
      (p.shared_cov - p.shared_cov.transpose()).cwiseAbs().maxCoeff() <=
          kStochasticTol)
    p.shared_cov = 0.5 * (p.shared_cov + p.shared_cov.transpose());
}

GaussianKernel::GaussianKernel(const Mat& cov)
    : llt_(cov), dim_(static_cast<int>(cov.rows())) {
  if (llt_.info() != Eigen::Success)
    fail(ErrorKind::kNumerical, "covariance is not positive-definite");
  const Mat L = llt_.matrixL();
  log_det_ = 2.0 * L.diagonal().array().log().sum();
  precision_ = llt_.solve(Mat::Identity(dim_, dim_));
}

double GaussianKernel::log_density(const Eigen::Ref<const Vec>& x,
                                   const Eigen::Ref<const Vec>& mean) const {
  const Vec d = x - mean;
  const Vec z = llt_.matrixL().solve(d);
  return -0.5 * z.squaredNorm() -
         0.5 * (dim_ * std::log(2.0 * std::numbers::pi) + log_det_);
}

double log_emission(const ModelParams& p, int chain, int state,
                    const Eigen::Ref<const Vec>& obs) {
  require(chain >= 0 && chain < p.num_chains(), "chain index out of range");
  require(state >= 0 && state < p.state_counts[chain],
          "state index out of range");
  require(obs.size() == p.obs_dim, "observation has wrong dimension");
  GaussianKernel g(p.shared_cov);
  return g.log_density(obs, p.means[chain].row(state).transpose());
}

std::vector<Mat> log_emission_tables(const ModelParams& p,
                                     const ObservationSequence& obs) {
  require(obs.dim() == p.obs_dim, "observation dimension mismatch");
  const GaussianKernel g(p.shared_cov);
  const int T = obs.length();
  std::vector<Mat> out;
  out.reserve(p.state_counts.size());
  for (int m = 0; m < p.num_chains(); ++m) {
    const int K = p.state_counts[m];
    Mat tab(T, K);
    for (int k = 0; k < K; ++k) {
      const Vec mu = p.means[m].row(k).transpose();
      for (int t = 0; t < T; ++t)
        tab(t, k) = g.log_density(obs.values.row(t).transpose(), mu);
    }
    out.push_back(std::move(tab));
  }
  return out;
}

double gated_transition_logprob(const ModelParams& p, int chain, int from,
                                int to, bool active) {
  require(chain >= 0 && chain < p.num_chains(), "chain index out of range");
  const int K = p.state_counts[chain];
  require(from >= 0 && from < K && to >= 0 && to < K,
          "state index out of range");
  if (active) return safe_log(p.chain_trans[chain](from, to));
  return from == to ? 0.0 : kLogZero;
}

void check_trajectory(const ModelParams& p, const LatentTrajectory& traj) {
  const int T = traj.length();
  const int M = p.num_chains();
  require(T >= 1, "trajectory is empty");
  require(static_cast<int>(traj.states.size()) == M,
          "trajectory has wrong number of chains");
  for (int m = 0; m < M; ++m)
    require(static_cast<int>(traj.states[m].size()) == T,
            "trajectory length mismatch on chain " + std::to_string(m + 1));
  for (int t = 0; t < T; ++t) {
    const int z = traj.switch_labels[t];
    require(z >= 0 && z < M, "switch label out of range");
    for (int m = 0; m < M; ++m) {
      const int s = traj.states[m][t];
      require(s >= 0 && s < p.state_counts[m], "state label out of range");
      if (t > 0 && m != z && s != traj.states[m][t - 1])
        fail(ErrorKind::kInvalidArgument,
             "idle-freeze violated: chain " + std::to_string(m + 1) +
                 " moved at t=" + std::to_string(t + 1) + " while idle");
    }
  }
}

double log_prior(const ModelParams& p, const LatentTrajectory& traj) {
  check_trajectory(p, traj);
  const int T = traj.length();
  const auto& Z = traj.switch_labels;
  double lp = safe_log(p.switch_init(Z[0]));
  for (int t = 1; t < T; ++t) lp += safe_log(p.switch_trans(Z[t - 1], Z[t]));
  for (int m = 0; m < p.num_chains(); ++m) {
    const auto& S = traj.states[m];
    lp += safe_log(p.chain_init[m](S[0]));
    for (int t = 1; t < T; ++t)
      lp += gated_transition_logprob(p, m, S[t - 1], S[t], Z[t] == m);
  }
  return lp;
}

double log_joint(const ModelParams& p, const LatentTrajectory& traj,
                 const ObservationSequence& obs) {
  require(obs.length() == traj.length(),
          "observation and trajectory lengths differ");
  require(obs.dim() == p.obs_dim, "observation dimension mismatch");
  double lj = log_prior(p, traj);
  const GaussianKernel g(p.shared_cov);
  for (int t = 0; t < obs.length(); ++t) {
    const int z = traj.switch_labels[t];
    const int s = traj.states[z][t];
    lj += g.log_density(obs.values.row(t).transpose(),
                        p.means[z].row(s).transpose());
  }
  return lj;
}

Vec stationary_distribution(const Mat& trans) {
  const Eigen::Index n = trans.rows();
  require(n >= 1 && trans.cols() == n, "transition matrix must be square");
  // Null space of (A^T - I); nullity != 1 means no unique stationary vector.
  const Mat sys = trans.transpose() - Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(sys);
  const Vec sv = svd.singularValues();
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) < 1e-10) ++nullity;
  if (nullity != 1)
    fail(ErrorKind::kInvalidArgument,
         "transition matrix is not ergodic (stationary vector not unique)");

  Mat aug(n + 1, n);
  aug.topRows(n) = sys;
  aug.row(n).setOnes();
  Vec rhs = Vec::Zero(n + 1);
  rhs(n) = 1.0;
  Vec xi = aug.colPivHouseholderQr().solve(rhs);
  if ((xi.array() < -1e-9).any())
    fail(ErrorKind::kInvalidArgument,
         "transition matrix has no non-negative stationary vector");
  xi = xi.cwiseMax(0.0);
  return xi / xi.sum();
}

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r))
    fail(ErrorKind::kInvalidArgument, "partition count overflows 64 bits");
  return r;
}

}  // namespace

std::uint64_t count_partitions_ihmp(int n) {
  require(n >= 1, "partition count needs N >= 1");
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(n) + 1, 0);
  ways[0] = 1;
  for (int part = 1; part <= n; ++part)
    for (int v = part; v <= n; ++v) ways[v] = checked_add(ways[v], ways[v - part]);
  return ways[n];
}

std::uint64_t count_partitions_imp(int n) {
  require(n >= 1, "partition count needs N >= 1");
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 1; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(checked_add(next.back(), v));
    row = std::move(next);
  }
  return row.back();
}

}  // namespace ihmp
