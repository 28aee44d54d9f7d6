#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ihmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Stand-in for log(0). Large enough to dominate any realistic sum, small
// enough that a handful of them added together stay finite.
inline constexpr double kLogZero = -1e300;

// Floor applied inside variational log terms (entropies, log E^m).
inline constexpr double kProbFloor = 1e-300;

enum class ErrorKind {
  kInvalidArgument,
  kNumerical,
  kResourceCap,
  kIo,
  kParse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

/// log(x) with log(0) mapped to kLogZero.
inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kLogZero; }

/// log(max(x, kProbFloor)); the variational bounds use this convention.
inline double floored_log(double x) {
  return std::log(x > kProbFloor ? x : kProbFloor);
}

inline double log_sum_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero || !std::isfinite(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const double mx = v.maxCoeff();
  if (mx <= kLogZero) return kLogZero;
  return mx + std::log((v.array() - mx).exp().sum());
}

/// Entry-wise floored log of a matrix.
inline Mat floored_log(const Mat& m) {
  return m.unaryExpr([](double x) { return floored_log(x); });
}

inline Vec floored_log(const Vec& v) {
  return v.unaryExpr([](double x) { return floored_log(x); });
}

/// Softmax of a log-domain vector, in place safe.
inline Vec softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp();
  return e / e.sum();
}

}  // namespace ihmp
