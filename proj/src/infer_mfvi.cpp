#include "ihmp/inference.hpp"

#include "variational_common.hpp"

namespace ihmp {

namespace detail {

LogParams::LogParams(const ModelParams& p, double idle_log_floor) {
  ensure_valid(p);
  log_switch_init = floored_log(p.switch_init);
  log_switch_trans = floored_log(p.switch_trans);
  for (int m = 0; m < p.num_chains(); ++m) {
    const int K = p.state_counts[m];
    log_chain_init.push_back(floored_log(p.chain_init[m]));
    log_chain_trans.push_back(floored_log(p.chain_trans[m]));
    Mat idle = floored_log(Mat(Mat::Identity(K, K)));
    if (idle_log_floor < 0.0)
      idle = idle.cwiseMax(idle_log_floor);
    log_idle.push_back(idle);
  }
}

Mat LogParams::gated(int m, double phi) const {
  return phi * log_chain_trans[m] + (1.0 - phi) * log_idle[m];
}

double neg_entropy_terms(const Eigen::Ref<const Mat>& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      if (q(i, j) > 0.0) s += q(i, j) * floored_log(q(i, j));
  return s;
}

double emission_term(const VariationalState& vs, const std::vector<Mat>& log_emis) {
  double s = 0.0;
  for (std::size_t m = 0; m < vs.theta.size(); ++m)
    s += vs.phi.col(static_cast<Eigen::Index>(m))
             .dot(vs.theta[m].cwiseProduct(log_emis[m]).rowwise().sum());
  return s;
}

void check_finite(const Vec& logits, const char* what, int t) {
  if (!logits.allFinite())
    fail(ErrorKind::kNumerical, std::string("non-finite ") + what +
                                    " exponent at t=" + std::to_string(t + 1));
}

}  // namespace detail

using detail::LogParams;

VariationalState initial_variational_state(const ModelParams& p,
                                           const ObservationSequence& obs) {
  const std::vector<Mat> le = log_emission_tables(p, obs);
  const int T = obs.length();
  const int M = p.num_chains();
  VariationalState vs;
  vs.phi.resize(T, M);
  vs.theta.resize(M);
  for (int m = 0; m < M; ++m) vs.theta[m].resize(T, p.state_counts[m]);
  Vec lz(M);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      const Vec row = le[m].row(t).transpose();
      vs.theta[m].row(t) = softmax(row).transpose();
      lz(m) = log_sum_exp(row);
    }
    vs.phi.row(t) = softmax(lz).transpose();
  }
  return vs;
}

double elbo_mf(const ModelParams& p, const ObservationSequence& obs,
               const VariationalState& vs) {
  const LogParams lp(p);
  const std::vector<Mat> le = log_emission_tables(p, obs);
  const int T = obs.length();
  const int M = p.num_chains();
  require(vs.length() == T, "variational state length mismatch");

  double e = vs.phi.row(0).dot(lp.log_switch_init.transpose());
  for (int t = 1; t < T; ++t)
    e += vs.phi.row(t - 1) * lp.log_switch_trans * vs.phi.row(t).transpose();
  for (int m = 0; m < M; ++m) {
    const Mat& th = vs.theta[m];
    e += th.row(0).dot(lp.log_chain_init[m].transpose());
    for (int t = 1; t < T; ++t)
      e += th.row(t - 1) * lp.gated(m, vs.phi(t, m)) * th.row(t).transpose();
  }
  e += detail::emission_term(vs, le);

  double neg_h = detail::neg_entropy_terms(vs.phi);
  for (const Mat& th : vs.theta) neg_h += detail::neg_entropy_terms(th);
  return e - neg_h;
}

void mf_sweep(const ModelParams& p, const std::vector<Mat>& le,
              VariationalState& vs, double damping, double idle_log_floor) {
  require(damping > 0.0 && damping <= 1.0, "damping must be in (0, 1]");
  const LogParams lp(p, idle_log_floor);
  const int T = vs.length();
  const int M = p.num_chains();
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      Mat& th = vs.theta[m];
      Vec logit = vs.phi(t, m) * le[m].row(t).transpose();
      if (t == 0) logit += lp.log_chain_init[m];
      if (t > 0)
        logit += lp.gated(m, vs.phi(t, m)).transpose() * th.row(t - 1).transpose();
      if (t + 1 < T)
        logit += lp.gated(m, vs.phi(t + 1, m)) * th.row(t + 1).transpose();
      detail::check_finite(logit, "theta", t);
      th.row(t) = (damping * softmax(logit) + (1.0 - damping) * th.row(t).transpose())
                      .transpose();
    }
    Vec logit(M);
    for (int m = 0; m < M; ++m) {
      logit(m) = vs.theta[m].row(t).dot(le[m].row(t));
      if (t > 0) {
        const Mat diff = lp.log_chain_trans[m] - lp.log_idle[m];
        logit(m) += vs.theta[m].row(t - 1) * diff * vs.theta[m].row(t).transpose();
      }
    }
    if (t == 0) logit += lp.log_switch_init;
    if (t > 0) logit += lp.log_switch_trans.transpose() * vs.phi.row(t - 1).transpose();
    if (t + 1 < T) logit += lp.log_switch_trans * vs.phi.row(t + 1).transpose();
    detail::check_finite(logit, "phi", t);
    vs.phi.row(t) =
        (damping * softmax(logit) + (1.0 - damping) * vs.phi.row(t).transpose())
            .transpose();
  }
}

SufficientStats mf_stats(const VariationalState& vs) {
  const int T = vs.length();
  const int M = static_cast<int>(vs.theta.size());
  SufficientStats s;
  s.switch_first = vs.phi.row(0).transpose();
  s.switch_counts = Mat::Zero(M, M);
  for (int t = 1; t < T; ++t)
    s.switch_counts += vs.phi.row(t - 1).transpose() * vs.phi.row(t);
  for (int m = 0; m < M; ++m) {
    const Mat& th = vs.theta[m];
    s.chain_first.push_back(th.row(0).transpose());
    Mat c = Mat::Zero(th.cols(), th.cols());
    for (int t = 1; t < T; ++t)
      c += vs.phi(t, m) * th.row(t - 1).transpose() * th.row(t);
    s.chain_counts.push_back(c);
    s.resp.push_back(th.array().colwise() * vs.phi.col(m).array());
  }
  return s;
}

namespace detail {

InferenceResult variational_fit(Algorithm algorithm, const ObservationSequence& obs,
                                const std::vector<int>& state_counts,
                                const FitOptions& opt) {
  require(opt.max_iter >= 1, "max_iter must be >= 1");
  require(opt.inner_sweeps >= 1, "inner sweeps must be >= 1");
  const bool structured = algorithm == Algorithm::kSvi;
  ModelParams params = initial_params(obs, state_counts, opt);
  VariationalState vs = initial_variational_state(params, obs);
  std::vector<Mat> le = log_emission_tables(params, obs);

  // Warm-up: the idle identity's log 0 is replaced by a floor that starts at
  // -1 and is lowered geometrically to the regular floor. Not traced.
  for (int w = 0; w < opt.anneal_iters; ++w) {
    const double lf = opt.anneal_iters == 1
                          ? std::log(kProbFloor)
                          : -std::pow(-std::log(kProbFloor),
                                      static_cast<double>(w) / (opt.anneal_iters - 1));
    if (structured) svi_update(params, le, vs, lf);
    else mf_sweep(params, le, vs, opt.damping, lf);
    if (opt.learn_params) {
      params = m_step(structured ? svi_stats(vs) : mf_stats(vs), obs, params,
                      opt.cov_floor_rel);
      le = log_emission_tables(params, obs);
    }
  }

  InferenceResult r;
  r.algorithm = algorithm;
  r.seed = opt.seed;
  for (int it = 0; it < opt.max_iter; ++it) {
    for (int s = 0; s < opt.inner_sweeps; ++s) {
      if (structured) svi_update(params, le, vs);
      else mf_sweep(params, le, vs, opt.damping);
    }
    if (opt.learn_params) {
      params = m_step(structured ? svi_stats(vs) : mf_stats(vs), obs, params,
                      opt.cov_floor_rel);
      le = log_emission_tables(params, obs);
    }
    const double bound = structured ? elbo_structured(params, obs, vs)
                                    : elbo_mf(params, obs, vs);
    if (!std::isfinite(bound))
      fail(ErrorKind::kNumerical, "variational bound is not finite");
    r.objective_trace.push_back(bound);
    r.iterations = it + 1;
    const auto n = r.objective_trace.size();
    if (n >= 2) {
      const double prev = r.objective_trace[n - 2];
      if (std::abs(bound - prev) < opt.tol * std::max(std::abs(prev), 1.0)) {
        r.converged = true;
        break;
      }
    }
  }
  r.params = params;
  r.switch_marginals = vs.phi;
  r.state_marginals = vs.theta;
  decode(r);
  return r;
}

}  // namespace detail

InferenceResult mfvi_fit(const ObservationSequence& obs,
                         const std::vector<int>& state_counts,
                         const FitOptions& options) {
  return detail::best_of_restarts(options, [&](const FitOptions& o) {
    return detail::variational_fit(Algorithm::kMfvi, obs, state_counts, o);
  });
}

}  // namespace ihmp
