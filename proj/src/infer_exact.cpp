#include <cmath>
#include <limits>

#include "ihmp/inference.hpp"

#include "variational_common.hpp"

namespace ihmp {

ProductStateIndex::ProductStateIndex(std::vector<int> state_counts)
    : counts_(std::move(state_counts)) {
  require(!counts_.empty(), "need at least one chain");
  stride_.resize(counts_.size());
  for (std::size_t m = counts_.size(); m-- > 0;) {
    require(counts_[m] >= 1, "state counts must be >= 1");
    stride_[m] = block_;
    block_ *= static_cast<std::size_t>(counts_[m]);
  }
  size_ = block_ * counts_.size();
}

std::size_t ProductStateIndex::flatten(int z, const std::vector<int>& s) const {
  require(z >= 0 && z < num_chains(), "switch label out of range");
  require(s.size() == counts_.size(), "state tuple has wrong length");
  std::size_t idx = static_cast<std::size_t>(z) * block_;
  for (std::size_t m = 0; m < counts_.size(); ++m) {
    require(s[m] >= 0 && s[m] < counts_[m], "chain state out of range");
    idx += static_cast<std::size_t>(s[m]) * stride_[m];
  }
  return idx;
}

int ProductStateIndex::unflatten(std::size_t index, std::vector<int>& s) const {
  require(index < size_, "product index out of range");
  const int z = static_cast<int>(index / block_);
  std::size_t rest = index % block_;
  s.resize(counts_.size());
  for (std::size_t m = 0; m < counts_.size(); ++m) {
    s[m] = static_cast<int>(rest / stride_[m]);
    rest %= stride_[m];
  }
  return z;
}

std::size_t product_state_count(const std::vector<int>& state_counts,
                                std::size_t cap) {
  require(!state_counts.empty(), "need at least one chain");
  auto too_big = [cap]() {
    fail(ErrorKind::kResourceCap,
         "exact EM needs more than " + std::to_string(cap) +
             " product states; use mfvi or svi for this model size");
  };
  std::size_t n = state_counts.size();
  if (n > cap) too_big();
  for (int k : state_counts) {
    require(k >= 1, "state counts must be >= 1");
    if (n > cap / static_cast<std::size_t>(k)) too_big();
    n *= static_cast<std::size_t>(k);
  }
  return n;
}

ProductChain build_product_chain(const ModelParams& p,
                                 const ObservationSequence& obs,
                                 std::size_t cap) {
  ensure_valid(p);
  require(obs.dim() == p.obs_dim, "observation dimension mismatch");
  const std::size_t N = product_state_count(p.state_counts, cap);
  const ProductStateIndex index(p.state_counts);
  const int M = p.num_chains();

  ProductChain pc;
  pc.init.resize(static_cast<Eigen::Index>(N));
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> s, s2;
  for (std::size_t a = 0; a < N; ++a) {
    const int z = index.unflatten(a, s);
    double pi = p.switch_init(z);
    for (int m = 0; m < M; ++m) pi *= p.chain_init[m](s[m]);
    pc.init(static_cast<Eigen::Index>(a)) = pi;

    for (int z2 = 0; z2 < M; ++z2) {
      const double az = p.switch_trans(z, z2);
      if (az == 0.0) continue;
      s2 = s;
      for (int k = 0; k < p.state_counts[z2]; ++k) {
        const double am = p.chain_trans[z2](s[z2], k);
        if (am == 0.0) continue;
        s2[z2] = k;
        trip.emplace_back(static_cast<int>(a), static_cast<int>(index.flatten(z2, s2)),
                          az * am);
      }
    }
  }
  pc.trans.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  pc.trans.setFromTriplets(trip.begin(), trip.end());
  pc.trans.makeCompressed();

  const std::vector<Mat> le = log_emission_tables(p, obs);
  pc.log_emission.resize(obs.length(), static_cast<Eigen::Index>(N));
  for (std::size_t a = 0; a < N; ++a) {
    const int z = index.unflatten(a, s);
    pc.log_emission.col(static_cast<Eigen::Index>(a)) = le[z].col(s[z]);
  }
  return pc;
}

namespace {

struct Forward {
  Mat alpha;  // T x N, rows normalized
  Vec scale;  // c_t
  Mat emis;   // T x N, exp(log_emission - shift_t)
  double log_likelihood = 0.0;
};

Forward forward_pass(const ProductChain& pc) {
  const auto T = pc.log_emission.rows();
  const auto N = pc.log_emission.cols();
  Forward f;
  f.alpha.resize(T, N);
  f.scale.resize(T);
  f.emis.resize(T, N);
  double shift_total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mx = pc.log_emission.row(t).maxCoeff();
    if (!std::isfinite(mx))
      fail(ErrorKind::kNumerical, "non-finite emission at t=" + std::to_string(t + 1));
    f.emis.row(t) = (pc.log_emission.row(t).array() - mx).exp();
    shift_total += mx;
  }
  Vec a = pc.init.cwiseProduct(f.emis.row(0).transpose());
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0)
      a = (pc.trans.transpose() * f.alpha.row(t - 1).transpose())
              .cwiseProduct(f.emis.row(t).transpose());
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      fail(ErrorKind::kNumerical,
           "forward pass underflow at t=" + std::to_string(t + 1));
    f.scale(t) = c;
    f.alpha.row(t) = (a / c).transpose();
  }
  f.log_likelihood = f.scale.array().log().sum() + shift_total;
  return f;
}

}  // namespace

double exact_log_likelihood(const ModelParams& params,
                            const ObservationSequence& obs, std::size_t cap) {
  return forward_pass(build_product_chain(params, obs, cap)).log_likelihood;
}

ExactPosterior exact_posterior(const ModelParams& p,
                               const ObservationSequence& obs,
                               std::size_t cap) {
  const ProductChain pc = build_product_chain(p, obs, cap);
  const Forward f = forward_pass(pc);
  const auto T = pc.log_emission.rows();
  const auto N = pc.log_emission.cols();
  const int M = p.num_chains();
  const ProductStateIndex index(p.state_counts);

  std::vector<int> zof(static_cast<std::size_t>(N));
  std::vector<std::vector<int>> sof(static_cast<std::size_t>(N));
  for (Eigen::Index a = 0; a < N; ++a)
    zof[a] = index.unflatten(static_cast<std::size_t>(a), sof[a]);

  Mat beta(T, N);
  beta.row(T - 1).setOnes();
  for (Eigen::Index t = T - 1; t >= 1; --t) {
    const Vec eb = f.emis.row(t).transpose().cwiseProduct(beta.row(t).transpose());
    beta.row(t - 1) = (pc.trans * eb / f.scale(t)).transpose();
  }

  ExactPosterior out;
  out.log_likelihood = f.log_likelihood;
  out.product_marginals = f.alpha.cwiseProduct(beta);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double s = out.product_marginals.row(t).sum();
    if (!(s > 0.0) || !std::isfinite(s))
      fail(ErrorKind::kNumerical, "posterior marginals degenerate");
    out.product_marginals.row(t) /= s;
  }

  SufficientStats& st = out.stats;
  st.switch_first = Vec::Zero(M);
  st.switch_counts = Mat::Zero(M, M);
  st.chain_first.resize(M);
  st.chain_counts.resize(M);
  st.resp.resize(M);
  out.switch_marginals = Mat::Zero(T, M);
  out.state_marginals.resize(M);
  for (int m = 0; m < M; ++m) {
    const int K = p.state_counts[m];
    st.chain_first[m] = Vec::Zero(K);
    st.chain_counts[m] = Mat::Zero(K, K);
    st.resp[m] = Mat::Zero(T, K);
    out.state_marginals[m] = Mat::Zero(T, K);
  }

  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index a = 0; a < N; ++a) {
      const double g = out.product_marginals(t, a);
      const int z = zof[a];
      out.switch_marginals(t, z) += g;
      st.resp[z](t, sof[a][z]) += g;
      for (int m = 0; m < M; ++m) out.state_marginals[m](t, sof[a][m]) += g;
      if (t == 0) {
        st.switch_first(z) += g;
        for (int m = 0; m < M; ++m) st.chain_first[m](sof[a][m]) += g;
      }
    }

  // Two-slice expectations accumulated over the nonzero transitions.
  for (Eigen::Index t = 1; t < T; ++t) {
    const double inv_c = 1.0 / f.scale(t);
    for (Eigen::Index a = 0; a < N; ++a) {
      const double al = f.alpha(t - 1, a);
      if (al == 0.0) continue;
      for (decltype(pc.trans)::InnerIterator it(pc.trans, a); it; ++it) {
        const auto b = it.col();
        const double w = al * it.value() * f.emis(t, b) * beta(t, b) * inv_c;
        const int z2 = zof[b];
        st.switch_counts(zof[a], z2) += w;
        st.chain_counts[z2](sof[a][z2], sof[b][z2]) += w;
      }
    }
  }
  return out;
}

namespace {

InferenceResult em_fit_once(const ObservationSequence& obs,
                            const std::vector<int>& state_counts,
                            const FitOptions& opt) {
  product_state_count(state_counts, opt.state_cap);
  ModelParams params = initial_params(obs, state_counts, opt);

  InferenceResult r;
  r.algorithm = Algorithm::kExact;
  r.seed = opt.seed;
  ExactPosterior post;
  for (int it = 0; it < std::max(opt.max_iter, 1); ++it) {
    post = exact_posterior(params, obs, opt.state_cap);
    r.objective_trace.push_back(post.log_likelihood);
    r.iterations = it + 1;
    const auto n = r.objective_trace.size();
    if (n >= 2) {
      const double prev = r.objective_trace[n - 2];
      if (std::abs(post.log_likelihood - prev) < opt.tol * std::max(std::abs(prev), 1.0)) {
        r.converged = true;
        break;
      }
    }
    if (!opt.learn_params) {
      r.converged = true;
      break;
    }
    if (it + 1 < opt.max_iter)
      params = m_step(post.stats, obs, params, opt.cov_floor_rel);
  }
  r.params = params;
  r.switch_marginals = post.switch_marginals;
  r.state_marginals = post.state_marginals;
  decode(r);
  return r;
}

}  // namespace

InferenceResult em_fit(const ObservationSequence& obs,
                       const std::vector<int>& state_counts,
                       const FitOptions& options) {
  return detail::best_of_restarts(options, [&](const FitOptions& o) {
    return em_fit_once(obs, state_counts, o);
  });
}

}  // namespace ihmp
