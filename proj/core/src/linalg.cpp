#include "nonnormal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "nonnormal/error.hpp"
#include "nonnormal/rng.hpp"

namespace nonnormal {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix must be square, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void swap_row_col(Matrix& t, Eigen::Index a, Eigen::Index b) {
  if (a == b) return;
  t.row(a).swap(t.row(b));
  t.col(a).swap(t.col(b));
}

// Permutation-only balancing (the first half of LAPACK's gebal). Rows whose
// off-diagonal entries inside the active window vanish are moved to the
// bottom, columns likewise to the top; each such move isolates an exact
// eigenvalue. Only orthogonal similarities are used, so the Schur factor keeps
// the Frobenius norm of the input.
std::pair<Eigen::Index, Eigen::Index> isolate_eigenvalues(Matrix& t) {
  Eigen::Index lo = 0;
  Eigen::Index hi = t.rows() - 1;

  bool found = true;
  while (found && hi > lo) {
    found = false;
    for (Eigen::Index j = hi; j >= lo; --j) {
      bool zero_row = true;
      for (Eigen::Index c = lo; c <= hi && zero_row; ++c) {
        if (c != j && t(j, c) != 0.0) zero_row = false;
      }
      if (zero_row) {
        swap_row_col(t, j, hi);
        --hi;
        found = true;
        break;
      }
    }
  }

  found = true;
  while (found && hi > lo) {
    found = false;
    for (Eigen::Index j = lo; j <= hi; ++j) {
      bool zero_col = true;
      for (Eigen::Index r = lo; r <= hi && zero_col; ++r) {
        if (r != j && t(r, j) != 0.0) zero_col = false;
      }
      if (zero_col) {
        swap_row_col(t, j, lo);
        ++lo;
        found = true;
        break;
      }
    }
  }
  return {lo, hi};
}

// Householder reduction of the window [lo, hi] to upper Hessenberg form,
// applied to full rows and columns so that t stays similar to the input.
void reduce_to_hessenberg(Matrix& t, Eigen::Index lo, Eigen::Index hi) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index k = lo; k + 2 <= hi; ++k) {
    const Eigen::Index len = hi - k;
    Vector v = t.col(k).segment(k + 1, len);
    const double tail = v.tail(len - 1).squaredNorm();
    if (tail == 0.0) continue;
    const double alpha = v(0) >= 0 ? -std::sqrt(v(0) * v(0) + tail) : std::sqrt(v(0) * v(0) + tail);
    v(0) -= alpha;
    const double beta = 2.0 / v.squaredNorm();

    auto rows = t.block(k + 1, k, len, n - k);
    Eigen::RowVectorXd vt_rows = v.transpose() * rows;
    rows.noalias() -= beta * v * vt_rows;

    auto cols = t.block(0, k + 1, hi + 1, len);
    Vector cols_v = cols * v;
    cols.noalias() -= beta * cols_v * v.transpose();

    t(k + 1, k) = alpha;
    t.col(k).segment(k + 2, len - 1).setZero();
  }
}

}  // namespace

ComplexSpectrum SchurForm::spectrum() const {
  const Eigen::Index n = t.rows();
  ComplexSpectrum out;
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (block_start[static_cast<std::size_t>(i)]) {
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
      const double p = 0.5 * (a - d);
      const double disc = p * p + b * c;
      const double re = 0.5 * (a + d);
      const double im = std::sqrt(std::max(-disc, 0.0));
      out.eigenvalues.emplace_back(re, im);
      out.eigenvalues.emplace_back(re, -im);
      ++i;
    } else {
      out.eigenvalues.emplace_back(t(i, i), 0.0);
    }
  }
  return out;
}

Matrix random_orthogonal(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_orthogonal: n must be >= 1");
  Rng rng(seed, Stream::kRecurrentInit);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

// Francis double-shift QR on the Hessenberg window, following the EISPACK
// hqr2 recurrences (without Schur vectors) so the full quasi-triangular
// factor is formed.
SchurForm real_schur(const Matrix& m) {
  require_square(m, "real_schur");
  if (!m.allFinite()) throw InvalidArgument("real_schur: matrix has non-finite entries");

  const Eigen::Index nn = m.rows();
  SchurForm out;
  out.t = m;
  out.block_start.assign(static_cast<std::size_t>(nn), false);
  if (nn == 0) return out;

  Matrix& h = out.t;
  const auto [low, high] = isolate_eigenvalues(h);
  reduce_to_hessenberg(h, low, high);

  const double eps = std::numeric_limits<double>::epsilon();
  double norm = 0.0;
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));
  }

  const long cap = 100 * static_cast<long>(std::max<Eigen::Index>(nn, 1));
  long sweeps = 0;
  Eigen::Index n = high;
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, w, x, y;
  int iter = 0;

  while (n >= low) {
    Eigen::Index l = n;
    while (l > low) {
      s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) < eps * s) break;
      --l;
    }

    if (l == n) {
      h(n, n) += exshift;
      if (n > low) h(n, n - 1) = 0.0;
      --n;
      iter = 0;
    } else if (l == n - 1) {
      w = h(n, n - 1) * h(n - 1, n);
      p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h(n, n) += exshift;
      h(n - 1, n - 1) += exshift;
      if (q >= 0) {
        // Real pair: rotate the 2×2 block to upper triangular.
        z = p >= 0 ? p + z : p - z;
        x = h(n, n - 1);
        s = std::abs(x) + std::abs(z);
        p = x / s;
        q = z / s;
        r = std::sqrt(p * p + q * q);
        p /= r;
        q /= r;
        for (Eigen::Index j = n - 1; j < nn; ++j) {
          z = h(n - 1, j);
          h(n - 1, j) = q * z + p * h(n, j);
          h(n, j) = q * h(n, j) - p * z;
        }
        for (Eigen::Index i = 0; i <= n; ++i) {
          z = h(i, n - 1);
          h(i, n - 1) = q * z + p * h(i, n);
          h(i, n) = q * h(i, n) - p * z;
        }
        h(n, n - 1) = 0.0;
      } else {
        out.block_start[static_cast<std::size_t>(n - 1)] = true;
      }
      if (n - 1 > low) h(n - 1, n - 2) = 0.0;
      n -= 2;
      iter = 0;
    } else {
      if (++sweeps > cap) {
        throw ConvergenceError("eigenvalues: QR iteration did not converge within " +
                               std::to_string(cap) + " sweeps (ill-conditioned input?)");
      }
      x = h(n, n);
      y = 0.0;
      w = 0.0;
      if (l < n) {
        y = h(n - 1, n - 1);
        w = h(n, n - 1) * h(n - 1, n);
      }
      // Exceptional shifts break cycles that the standard shift can fall into.
      if (iter == 10) {
        exshift += x;
        for (Eigen::Index i = low; i <= n; ++i) h(i, i) -= x;
        s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (iter == 30) {
        s = (y - x) / 2.0;
        s = s * s + w;
        if (s > 0) {
          s = std::sqrt(s);
          if (y < x) s = -s;
          s = x - w / ((y - x) / 2.0 + s);
          for (Eigen::Index i = low; i <= n; ++i) h(i, i) -= s;
          exshift += s;
          x = y = w = 0.964;
        }
      }
      ++iter;

      Eigen::Index mm = n - 2;
      while (mm >= l) {
        z = h(mm, mm);
        r = x - z;
        s = y - z;
        p = (r * s - w) / h(mm + 1, mm) + h(mm, mm + 1);
        q = h(mm + 1, mm + 1) - z - r - s;
        r = h(mm + 2, mm + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (mm == l) break;
        if (std::abs(h(mm, mm - 1)) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) * (std::abs(h(mm - 1, mm - 1)) + std::abs(z) + std::abs(h(mm + 1, mm + 1))))) {
          break;
        }
        --mm;
      }

      for (Eigen::Index i = mm + 2; i <= n; ++i) {
        h(i, i - 2) = 0.0;
        if (i > mm + 2) h(i, i - 3) = 0.0;
      }

      for (Eigen::Index k = mm; k <= n - 1; ++k) {
        const bool notlast = k != n - 1;
        if (k != mm) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s == 0.0) continue;
        if (k != mm) {
          h(k, k - 1) = -s * x;
        } else if (l != mm) {
          h(k, k - 1) = -h(k, k - 1);
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;

        for (Eigen::Index j = k; j < nn; ++j) {
          p = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            p += r * h(k + 2, j);
            h(k + 2, j) -= p * z;
          }
          h(k, j) -= p * x;
          h(k + 1, j) -= p * y;
        }
        for (Eigen::Index i = 0; i <= std::min(n, k + 3); ++i) {
          p = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            p += z * h(i, k + 2);
            h(i, k + 2) -= p * r;
          }
          h(i, k) -= p;
          h(i, k + 1) -= p * q;
        }
      }
    }
  }
  // Bulge-chasing leaves stale entries under the subdiagonal.
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
    if (i > 0 && !out.block_start[static_cast<std::size_t>(i - 1)]) h(i, i - 1) = 0.0;
  }
  return out;
}

ComplexSpectrum eigenvalues(const Matrix& m) {
  return real_schur(m).spectrum();
}

LeastSquaresFit least_squares(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw InvalidArgument("least_squares: X has " + std::to_string(x.rows()) + " rows but y has " +
                          std::to_string(y.size()) + " entries");
  }
  if (x.rows() < x.cols() + 1) {
    throw InvalidArgument("least_squares: need at least features + 1 samples");
  }
  const Eigen::Index samples = x.rows();
  const Eigen::Index features = x.cols();
  Matrix design(samples, features + 1);
  design.leftCols(features) = x;
  design.col(features).setOnes();

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  const Vector beta = cod.solve(y);

  LeastSquaresFit fit;
  fit.coefficients = beta.head(features);
  fit.intercept = beta(features);
  const Vector residual = y - design * beta;
  const double sse = residual.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  return fit;
}

Matrix noise_covariance(const Matrix& w, const NoiseCovarianceOptions& opts) {
  require_square(w, "noise_covariance");
  const Eigen::Index n = w.rows();
  Matrix c = Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  Matrix term(n, n);
  for (long k = 1; k <= opts.max_terms; ++k) {
    power = w * power;
    if (power.isZero(0.0)) return c;
    term.noalias() = power * power.transpose();
    c += term;
    if (!c.allFinite()) {
      throw ConvergenceError("noise_covariance: series sum W^k W^kT is non-convergent (overflow at term " +
                             std::to_string(k) + ")");
    }
    if (term.norm() < opts.tol) return c;
    if (k >= n && c.norm() > opts.divergence_cap) {
      throw ConvergenceError("noise_covariance: series sum W^k W^kT is non-convergent (||C||_F > " +
                             std::to_string(opts.divergence_cap) + " after " + std::to_string(k) +
                             " terms)");
    }
  }
  throw ConvergenceError("noise_covariance: series sum W^k W^kT did not converge within " +
                         std::to_string(opts.max_terms) + " terms");
}

double commutator_norm(const Matrix& w) {
  require_square(w, "commutator_norm");
  return (w.transpose() * w - w * w.transpose()).norm();
}

double spectral_radius(const Matrix& w) {
  double rho = 0.0;
  for (const auto& lambda : eigenvalues(w).eigenvalues) rho = std::max(rho, std::abs(lambda));
  return rho;
}

}  // namespace nonnormal
