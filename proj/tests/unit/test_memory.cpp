#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "../support/oracles.hpp"
#include "nonnormal/error.hpp"
#include "nonnormal/init.hpp"
#include "nonnormal/linalg.hpp"
#include "nonnormal/memory.hpp"

using namespace nonnormal;

namespace {

Vector unit(int n, std::mt19937_64& gen) {
  Vector v = oracle::gaussian_matrix(n, 1, gen);
  return v / v.norm();
}

Vector e1(int n) {
  Vector v = Vector::Zero(n);
  v(0) = 1.0;
  return v;
}

Matrix stable_random(int n, double radius, std::mt19937_64& gen) {
  Matrix w = oracle::gaussian_matrix(n, n, gen);
  Eigen::EigenSolver<Matrix> es(w, false);
  return w * (radius / es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

TEST(FisherMemory, ScaledIdentityGeometric) {
  const double lambda = 0.9;
  std::mt19937_64 gen(1);
  const auto curve = fisher_memory_curve(lambda * Matrix::Identity(20, 20), unit(20, gen), 300);
  ASSERT_EQ(curve.j.size(), 301u);
  for (int k = 0; k <= 300; ++k) {
    EXPECT_NEAR(curve.j[k], (1 - lambda * lambda) * std::pow(lambda, 2 * k), 1e-10);
  }
  EXPECT_NEAR(curve.j_tot, 1.0, 1e-10);
}

TEST(FisherMemory, ThreeNodeChain) {
  const auto curve = fisher_memory_curve(chain_matrix(3, 1.0), e1(3), 6);
  const double expect[] = {1.0, 0.5, 1.0 / 3.0, 0, 0, 0, 0};
  for (int k = 0; k <= 6; ++k) EXPECT_NEAR(curve.j[k], expect[k], 1e-14);
  EXPECT_NEAR(curve.j_tot, 11.0 / 6.0, 1e-14);
}

TEST(FisherMemory, OrthogonalTotalIsOne) {
  const Matrix w = 0.9 * random_orthogonal(100, 1);
  std::mt19937_64 gen(2);
  const auto curve = fisher_memory_curve(w, unit(100, gen), 2000);
  EXPECT_NEAR(curve.j_tot, 1.0, 1e-6);
}

TEST(FisherMemory, CurveInvariants) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 15);
    const auto curve = fisher_memory_curve(stable_random(n, 0.9, gen), unit(n, gen), 100);
    double sum = 0;
    for (double j : curve.j) {
      EXPECT_GE(j, 0.0);
      sum += j;
    }
    EXPECT_NEAR(curve.j_tot, sum, 1e-12 * sum);
  }
}

TEST(FisherMemory, MatchesBruteForceOracle) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 8);
    const Matrix w = stable_random(n, 0.2 + 0.6 * (gen() % 100) / 100.0, gen);
    const Vector v = unit(n, gen);
    const auto curve = fisher_memory_curve(w, v, 30);
    std::vector<double> vv(v.data(), v.data() + n);
    const auto ref = oracle::fisher_curve(oracle::from_eigen(w), vv, 30, 600);
    for (int k = 0; k <= 30; ++k) EXPECT_NEAR(curve.j[k], ref[k], 1e-9) << "n=" << n << " k=" << k;
  }
}

TEST(TotalFisherMemory, NormalMatricesGiveOne) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 40);
    const double lambda = 0.1 + 0.85 * (gen() % 1000) / 1000.0;
    Matrix w;
    switch (trial % 3) {
      case 0: w = lambda * Matrix::Identity(n, n); break;
      case 1: w = lambda * random_orthogonal(n, gen()); break;
      default: {
        // symmetric with spectral radius lambda
        const Matrix a = oracle::gaussian_matrix(n, n, gen);
        w = a + a.transpose();
        w *= lambda / Eigen::SelfAdjointEigenSolver<Matrix>(w).eigenvalues().cwiseAbs().maxCoeff();
      }
    }
    ASSERT_LT(commutator_norm(w), 1e-12);
    EXPECT_NEAR(total_fisher_memory(w, unit(n, gen)), 1.0, 1e-6) << "trial " << trial;
  }
}

TEST(TotalFisherMemory, BoundedByN) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 20);
    EXPECT_LE(total_fisher_memory(stable_random(n, 0.95, gen), unit(n, gen)), n + 1e-6);
  }
}

TEST(TotalFisherMemory, ChainMatchesBruteForce) {
  // C is diagonal with C_ii = sum_{k<=i} a^{2k}; W^k e1 = a^k e_{k+1}.
  const double alpha = 1.05;
  const int n = 100;
  double expect = 0;
  for (int k = 0; k < n; ++k) {
    double cii = 0;
    for (int m = 0; m <= k; ++m) cii += std::pow(alpha, 2 * m);
    expect += std::pow(alpha, 2 * k) / cii;
  }
  const double got = total_fisher_memory(chain_matrix(n, alpha), e1(n));
  EXPECT_GT(got, 1.0);
  EXPECT_LE(got, 100.0);
  EXPECT_NEAR(got, expect, 1e-8);
}

TEST(Amplification, OrthogonalIsConstant) {
  std::mt19937_64 gen(7);
  const auto amp = amplification_curve(random_orthogonal(50, 2), unit(50, gen), 200);
  for (double a : amp) EXPECT_NEAR(a, 1.0, 1e-12);
}

TEST(Amplification, ChainPowersThenExactZero) {
  const double alpha = 1.02;
  const auto amp = amplification_curve(chain_matrix(100, alpha), e1(100), 150);
  for (int k = 0; k < 100; ++k) EXPECT_NEAR(amp[k], std::pow(alpha, k), 1e-12 * std::pow(alpha, k));
  for (int k = 100; k <= 150; ++k) EXPECT_EQ(amp[k], 0.0);
}

TEST(Amplification, FeedbackChainRisesThenDecaysGradually) {
  const auto amp = amplification_curve(feedback_chain_matrix(100, 0.99, 0.05), e1(100), 400);
  const auto peak = std::max_element(amp.begin(), amp.end()) - amp.begin();
  EXPECT_GT(peak, 0);
  EXPECT_GT(amp[peak], 1.0);
  for (double a : amp) EXPECT_GT(a, 0.0);
  // decays geometrically past k = N instead of collapsing to zero
  for (std::size_t k = 101; k < amp.size(); ++k) EXPECT_GT(amp[k] / amp[k - 1], 0.1);
}

TEST(FisherMemory, RejectsBadShapes) {
  EXPECT_THROW(fisher_memory_curve(Matrix::Zero(3, 4), Vector::Ones(3), 5), InvalidArgument);
  EXPECT_THROW(fisher_memory_curve(Matrix::Zero(3, 3), Vector::Ones(4), 5), InvalidArgument);
  EXPECT_THROW(total_fisher_memory(1.2 * Matrix::Identity(3, 3), Vector::Ones(3)), ConvergenceError);
}
