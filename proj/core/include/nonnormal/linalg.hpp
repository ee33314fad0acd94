#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace nonnormal {

/// Dense real matrix; W, V, C and friends all live in one of these.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a real square matrix, in the order they appear on the
/// diagonal of the real Schur form. Complex values come in conjugate pairs.
struct ComplexSpectrum {
  std::vector<std::complex<double>> eigenvalues;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Real Schur factor T of M = Q T Qᵀ (Q is not accumulated).
///
/// T is quasi upper triangular: `block_start[i]` is true when a 2×2 block
/// holding a complex-conjugate pair starts at row i. Everything below the
/// block diagonal is exactly zero.
struct SchurForm {
  Matrix t;
  std::vector<bool> block_start;

  ComplexSpectrum spectrum() const;
};

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the signs of R's diagonal folded into Q. Gaussian entries are drawn in
/// row-major order from `Rng(seed, Stream::kRecurrentInit)`.
Matrix random_orthogonal(int n, std::uint64_t seed);

/// Real Schur form via permutation balancing, Householder reduction to
/// Hessenberg form and Francis double-shift QR iteration. Throws
/// ConvergenceError after 100·n QR sweeps without full deflation.
SchurForm real_schur(const Matrix& m);

/// All n eigenvalues of a square matrix (see real_schur).
ComplexSpectrum eigenvalues(const Matrix& m);

struct LeastSquaresFit {
  Vector coefficients;  ///< one per feature column
  double intercept = 0.0;
  double r_squared = 0.0;  ///< 1 − SSE/SST on the fitting set
};

/// Ordinary least squares of y on the columns of x plus an intercept.
/// Rank-deficient designs get the minimum-norm solution.
LeastSquaresFit least_squares(const Matrix& x, const Vector& y);

struct NoiseCovarianceOptions {
  double tol = 1e-10;
  long max_terms = 100000;
  double divergence_cap = 1e12;
};

/// C = Σ_k W^k W^kᵀ, accumulated term by term (equivalently the fixed point
/// of C ← W C Wᵀ + I started from C = I) until a term's Frobenius norm drops
/// below `tol` or W^k becomes exactly zero. Throws ConvergenceError when the
/// partial sum exceeds the divergence cap after n terms (every nilpotent W
/// has terminated by then) or when max_terms is reached.
Matrix noise_covariance(const Matrix& w, const NoiseCovarianceOptions& opts = {});

/// ‖WᵀW − WWᵀ‖_F
double commutator_norm(const Matrix& w);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& w);

}  // namespace nonnormal
