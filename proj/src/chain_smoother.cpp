#include "ihmp/chain_smoother.hpp"

namespace ihmp {

namespace {

template <typename TransAt>
ChainPosterior smooth_impl(const Vec& log_init, const Mat& log_node,
                           TransAt trans_at) {
  const int T = static_cast<int>(log_node.rows());
  const int K = static_cast<int>(log_node.cols());
  require(T >= 1, "chain smoother needs at least one step");
  require(log_init.size() == K, "initial vector size mismatch");

  ChainPosterior out;
  Mat la(T, K);
  out.log_scale.resize(T);

  Vec a = log_init + log_node.row(0).transpose();
  double c = log_sum_exp(a);
  if (!std::isfinite(c) || c <= kLogZero)
    fail(ErrorKind::kNumerical, "forward pass underflow at t=1");
  la.row(0) = (a.array() - c).matrix().transpose();
  out.log_scale(0) = c;

  Vec tmp(K);
  for (int t = 1; t < T; ++t) {
    const Mat& L = trans_at(t);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) tmp(j) = la(t - 1, j) + L(j, i);
      a(i) = log_sum_exp(tmp) + log_node(t, i);
    }
    c = log_sum_exp(a);
    if (!std::isfinite(c) || c <= kLogZero)
      fail(ErrorKind::kNumerical,
           "forward pass underflow at t=" + std::to_string(t + 1));
    la.row(t) = (a.array() - c).matrix().transpose();
    out.log_scale(t) = c;
  }
  out.log_norm = out.log_scale.sum();

  Mat lb = Mat::Zero(T, K);
  for (int t = T - 1; t >= 1; --t) {
    const Mat& L = trans_at(t);
    for (int j = 0; j < K; ++j) {
      for (int i = 0; i < K; ++i)
        tmp(i) = L(j, i) + log_node(t, i) + lb(t, i);
      lb(t - 1, j) = log_sum_exp(tmp) - out.log_scale(t);
    }
  }

  out.node = (la + lb).array().exp().matrix();
  for (int t = 0; t < T; ++t) {
    const double s = out.node.row(t).sum();
    if (!(s > 0.0) || !std::isfinite(s))
      fail(ErrorKind::kNumerical, "smoothing marginals degenerate");
    out.node.row(t) /= s;
  }

  out.pair.resize(T);
  for (int t = 1; t < T; ++t) {
    const Mat& L = trans_at(t);
    Mat P(K, K);
    for (int j = 0; j < K; ++j)
      for (int i = 0; i < K; ++i)
        P(j, i) = std::exp(la(t - 1, j) + L(j, i) + log_node(t, i) + lb(t, i) -
                           out.log_scale(t));
    const double s = P.sum();
    if (!(s > 0.0) || !std::isfinite(s))
      fail(ErrorKind::kNumerical, "pair marginals degenerate");
    out.pair[t] = P / s;
  }
  return out;
}

}  // namespace

double ChainPosterior::entropy() const { return markov_entropy(node, pair); }

double markov_entropy(const Mat& node, const std::vector<Mat>& pair) {
  const auto T = node.rows();
  double h = 0.0;
  for (Eigen::Index i = 0; i < node.cols(); ++i) {
    const double q = node(0, i);
    if (q > 0.0) h -= q * floored_log(q);
  }
  for (Eigen::Index t = 1; t < T; ++t) {
    const Mat& P = pair[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < P.rows(); ++j) {
      const double prev = P.row(j).sum();
      if (prev <= 0.0) continue;
      for (Eigen::Index i = 0; i < P.cols(); ++i) {
        const double x = P(j, i);
        if (x > 0.0) h -= x * (floored_log(x) - floored_log(prev));
      }
    }
  }
  return h;
}

ChainPosterior smooth_chain(const Vec& log_init, const Mat& log_node,
                            const Mat& log_trans) {
  require(log_trans.rows() == log_node.cols() &&
              log_trans.cols() == log_node.cols(),
          "transition size mismatch");
  return smooth_impl(log_init, log_node,
                     [&](int) -> const Mat& { return log_trans; });
}

ChainPosterior smooth_chain(const Vec& log_init, const Mat& log_node,
                            const std::vector<Mat>& log_trans) {
  require(static_cast<Eigen::Index>(log_trans.size()) == log_node.rows(),
          "need one transition per step");
  return smooth_impl(log_init, log_node,
                     [&](int t) -> const Mat& { return log_trans[t]; });
}

}  // namespace ihmp
