#pragma once

#include <vector>

#include "nonnormal/linalg.hpp"

namespace nonnormal {

/// Fisher memory of the linear network h_t = W h_{t-1} + v s_t + z_t with
/// unit isotropic Gaussian noise z_t.
struct MemoryCurve {
  std::vector<double> j;              ///< J(k) for k = 0..k_max, in nats
  double j_tot = 0.0;                 ///< Σ_k J(k) over the computed range
  std::vector<double> amplification;  ///< ‖W^k v‖₂ for k = 0..k_max
};

/// J(k) = (W^k v)ᵀ C⁻¹ (W^k v) for k = 0..k_max, with C the noise covariance
/// (series tolerance `tol`). C is Cholesky-factored once and reused for
/// every lag.
MemoryCurve fisher_memory_curve(const Matrix& w, const Vector& v, int k_max, double tol = 1e-10);

/// Σ_k J(k) with an adaptive horizon: runs at least 2N lags and stops once
/// the largest of the last 10 terms falls below tol · (running sum).
double total_fisher_memory(const Matrix& w, const Vector& v, double tol = 1e-12);

/// ‖W^k v‖₂ for k = 0..k_max by repeated matrix-vector products.
std::vector<double> amplification_curve(const Matrix& w, const Vector& v, int k_max);

}  // namespace nonnormal
