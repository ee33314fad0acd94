#include "nonnormal/memory.hpp"

#include <algorithm>
#include <string>

#include "nonnormal/error.hpp"

namespace nonnormal {

namespace {

void check_shapes(const Matrix& w, const Vector& v) {
  if (w.rows() != w.cols()) throw InvalidArgument("memory: W must be square");
  if (v.size() != w.rows()) {
    throw InvalidArgument("memory: v has dimension " + std::to_string(v.size()) + ", expected " +
                          std::to_string(w.rows()));
  }
}

Eigen::LLT<Matrix> factor_covariance(const Matrix& w, double tol) {
  NoiseCovarianceOptions opts;
  opts.tol = tol;
  Eigen::LLT<Matrix> llt(noise_covariance(w, opts));
  if (llt.info() != Eigen::Success) {
    throw Error("memory: noise covariance is not numerically positive definite");
  }
  return llt;
}

double fisher_term(const Eigen::LLT<Matrix>& llt, const Vector& signal) {
  return llt.matrixL().solve(signal).squaredNorm();
}

}  // namespace

MemoryCurve fisher_memory_curve(const Matrix& w, const Vector& v, int k_max, double tol) {
  check_shapes(w, v);
  if (k_max < 0) throw InvalidArgument("fisher_memory_curve: k_max must be >= 0");
  const auto llt = factor_covariance(w, tol);

  MemoryCurve curve;
  curve.j.reserve(static_cast<std::size_t>(k_max) + 1);
  curve.amplification.reserve(static_cast<std::size_t>(k_max) + 1);
  Vector signal = v;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) signal = w * signal;
    const double jk = fisher_term(llt, signal);
    curve.j.push_back(jk);
    curve.amplification.push_back(signal.norm());
    curve.j_tot += jk;
  }
  return curve;
}

double total_fisher_memory(const Matrix& w, const Vector& v, double tol) {
  check_shapes(w, v);
  const auto llt = factor_covariance(w, 1e-10);

  constexpr int kWindow = 10;
  constexpr long kMaxLags = 10'000'000;
  const long min_lags = 2 * w.rows();

  std::vector<double> recent(kWindow, 0.0);
  double total = 0.0;
  Vector signal = v;
  for (long k = 0; k < kMaxLags; ++k) {
    if (k > 0) signal = w * signal;
    const double jk = fisher_term(llt, signal);
    total += jk;
    recent[static_cast<std::size_t>(k % kWindow)] = jk;
    if (k + 1 >= std::max<long>(min_lags, kWindow)) {
      const double tail = *std::max_element(recent.begin(), recent.end());
      if (tail <= tol * total) return total;
    }
  }
  throw ConvergenceError("total_fisher_memory: memory curve did not decay within " +
                         std::to_string(kMaxLags) + " lags");
}

std::vector<double> amplification_curve(const Matrix& w, const Vector& v, int k_max) {
  check_shapes(w, v);
  if (k_max < 0) throw InvalidArgument("amplification_curve: k_max must be >= 0");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  Vector signal = v;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) signal = w * signal;
    out.push_back(signal.norm());
  }
  return out;
}

}  // namespace nonnormal
