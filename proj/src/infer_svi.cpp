#include "ihmp/inference.hpp"

#include "variational_common.hpp"

namespace ihmp {

using detail::LogParams;

void svi_update(const ModelParams& p, const std::vector<Mat>& le,
                VariationalState& vs, double idle_log_floor) {
  const LogParams lp(p, idle_log_floor);
  const int T = vs.length();
  const int M = p.num_chains();
  vs.theta.resize(M);
  vs.log_h.resize(M);
  vs.chain_pair.resize(M);

  // Component chains: emission weighted by the switch marginal, transition
  // tilted between A^m and the idle identity.
  std::vector<Mat> trans(static_cast<std::size_t>(T));
  for (int m = 0; m < M; ++m) {
    vs.log_h[m] = le[m].array().colwise() * vs.phi.col(m).array();
    for (int t = 1; t < T; ++t) trans[t] = lp.gated(m, vs.phi(t, m));
    ChainPosterior post = smooth_chain(lp.log_chain_init[m], vs.log_h[m], trans);
    vs.theta[m] = std::move(post.node);
    vs.chain_pair[m] = std::move(post.pair);
  }

  vs.log_g.resize(T, M);
  for (int m = 0; m < M; ++m) {
    const Mat diff = lp.log_chain_trans[m] - lp.log_idle[m];
    for (int t = 0; t < T; ++t) {
      double g = vs.theta[m].row(t).dot(le[m].row(t));
      if (t > 0) g += vs.chain_pair[m][t].cwiseProduct(diff).sum();
      vs.log_g(t, m) = g;
    }
  }
  if (!vs.log_g.allFinite())
    fail(ErrorKind::kNumerical, "non-finite switching surrogate");
  ChainPosterior sw = smooth_chain(lp.log_switch_init, vs.log_g, lp.log_switch_trans);
  vs.phi = std::move(sw.node);
  vs.switch_pair = std::move(sw.pair);
}

VariationalState initial_structured_state(const ModelParams& p,
                                          const ObservationSequence& obs) {
  VariationalState vs = initial_variational_state(p, obs);
  svi_update(p, log_emission_tables(p, obs), vs);
  return vs;
}

double elbo_structured(const ModelParams& p, const ObservationSequence& obs,
                       const VariationalState& vs) {
  const LogParams lp(p);
  const std::vector<Mat> le = log_emission_tables(p, obs);
  const int T = obs.length();
  const int M = p.num_chains();
  require(vs.length() == T, "variational state length mismatch");
  require(static_cast<int>(vs.switch_pair.size()) == T &&
              static_cast<int>(vs.chain_pair.size()) == M,
          "structured state lacks pair marginals");
  for (const Mat& lh : vs.log_h)
    if (lh.size() > 0 && !(lh.array() > kLogZero).all())
      fail(ErrorKind::kInvalidArgument, "surrogate emission is not positive");

  double e = vs.phi.row(0).dot(lp.log_switch_init.transpose());
  for (int t = 1; t < T; ++t)
    e += vs.switch_pair[t].cwiseProduct(lp.log_switch_trans).sum();
  for (int m = 0; m < M; ++m) {
    e += vs.theta[m].row(0).dot(lp.log_chain_init[m].transpose());
    for (int t = 1; t < T; ++t)
      e += vs.chain_pair[m][t].cwiseProduct(lp.gated(m, vs.phi(t, m))).sum();
  }
  e += detail::emission_term(vs, le);

  double h = markov_entropy(vs.phi, vs.switch_pair);
  for (int m = 0; m < M; ++m) h += markov_entropy(vs.theta[m], vs.chain_pair[m]);
  return e + h;
}

SufficientStats svi_stats(const VariationalState& vs) {
  const int T = vs.length();
  const int M = static_cast<int>(vs.theta.size());
  SufficientStats s;
  s.switch_first = vs.phi.row(0).transpose();
  s.switch_counts = Mat::Zero(M, M);
  for (int t = 1; t < T; ++t) s.switch_counts += vs.switch_pair[t];
  for (int m = 0; m < M; ++m) {
    const Mat& th = vs.theta[m];
    s.chain_first.push_back(th.row(0).transpose());
    Mat c = Mat::Zero(th.cols(), th.cols());
    for (int t = 1; t < T; ++t) c += vs.phi(t, m) * vs.chain_pair[m][t];
    s.chain_counts.push_back(c);
    s.resp.push_back(th.array().colwise() * vs.phi.col(m).array());
  }
  return s;
}

InferenceResult svi_fit(const ObservationSequence& obs,
                        const std::vector<int>& state_counts,
                        const FitOptions& options) {
  return detail::best_of_restarts(options, [&](const FitOptions& o) {
    return detail::variational_fit(Algorithm::kSvi, obs, state_counts, o);
  });
}

}  // namespace ihmp
