#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../support/oracles.hpp"
#include "nonnormal/analysis.hpp"
#include "nonnormal/error.hpp"
#include "nonnormal/init.hpp"

using namespace nonnormal;

namespace {

Vector e1(int n) {
  Vector v = Vector::Zero(n);
  v(0) = 1;
  return v;
}

double mean_r2(DecodingNetwork net, double sigma, Nonlinearity f, int seeds) {
  double s = 0;
  for (int k = 1; k <= seeds; ++k) {
    DecodingConfig c;
    c.network = net;
    c.noise_sigma = sigma;
    c.nonlinearity = f;
    c.seed = static_cast<std::uint64_t>(k);
    s += decoding_r2(c);
  }
  return s / seeds;
}

}  // namespace

TEST(Decoding, LinearNoiselessIsPerfect) {
  for (auto net : {DecodingNetwork::kChain, DecodingNetwork::kOrthogonal}) {
    DecodingConfig c;
    c.network = net;
    EXPECT_GE(decoding_r2(c), 1.0 - 1e-6) << to_string(net);
  }
}

TEST(Decoding, ChainBeatsOrthogonalUnderNoise) {
  const double chain = mean_r2(DecodingNetwork::kChain, 0.1, Nonlinearity::kLinear, 3);
  const double orth = mean_r2(DecodingNetwork::kOrthogonal, 0.1, Nonlinearity::kLinear, 3);
  EXPECT_GT(chain, orth + 0.05);
}

TEST(Decoding, ChainBeatsOrthogonalWithElu) {
  EXPECT_GT(mean_r2(DecodingNetwork::kChain, 0, Nonlinearity::kElu, 3),
            mean_r2(DecodingNetwork::kOrthogonal, 0, Nonlinearity::kElu, 3) + 0.05);
}

TEST(Decoding, SeededAndValidated) {
  DecodingConfig c;
  c.noise_sigma = 0.1;
  c.n = 20;
  c.t_len = 30;
  c.trials = 60;
  EXPECT_EQ(decoding_r2(c), decoding_r2(c));
  c.trials = 20;
  EXPECT_THROW(decoding_r2(c), InvalidArgument);
}

TEST(Henrici, NormalMatricesAreZero) {
  EXPECT_NEAR(henrici_index(Matrix::Identity(100, 100)), 0.0, 1e-8);
  for (std::uint64_t s = 1; s <= 3; ++s) EXPECT_NEAR(henrici_index(random_orthogonal(100, s)), 0.0, 1e-8);
  std::mt19937_64 gen(1);
  const Matrix a = oracle::gaussian_matrix(40, 40, gen);
  EXPECT_NEAR(henrici_index(a + a.transpose()), 0.0, 1e-8);
}

TEST(Henrici, KnownValues) {
  EXPECT_NEAR(henrici_index(chain_matrix(100, 1.0)), std::sqrt(99.0), 1e-12);
  Matrix j(2, 2);
  j << 0, 1, 0, 0;
  EXPECT_NEAR(henrici_index(j), 1.0, 1e-15);
  // triangular: strictly upper part
  Matrix t(3, 3);
  t << 1, 2, 3, 0, 4, 5, 0, 0, 6;
  EXPECT_NEAR(henrici_index(t), std::sqrt(4.0 + 9 + 25), 1e-12);
}

TEST(Henrici, AgreesWithDirectFormulaOnNonNormal) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 30);
    const Matrix w = oracle::gaussian_matrix(n, n, gen);
    const double d = henrici_index(w);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, henrici_index_direct(w), 1e-6 * std::max(1.0, d));
  }
}

TEST(Henrici, OrthogonalSimilarityInvariant) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 30);
    const Matrix w = oracle::gaussian_matrix(n, n, gen);
    const Matrix q = random_orthogonal(n, gen());
    EXPECT_NEAR(henrici_index(w), henrici_index(q.transpose() * w * q), 1e-6);
  }
}

TEST(PeakRanking, ChainPeaksInOrder) {
  const auto r = peak_activity_ranking(chain_matrix(50, 1.0), Nonlinearity::kLinear, e1(50), 100, 1);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(r.order[i], i);
    EXPECT_EQ(r.peak_time[i], i);
  }
  EXPECT_FALSE(r.degenerate);
}

TEST(PeakRanking, IdentityIsDegenerateJitterOrder) {
  const auto a = peak_activity_ranking(0.9 * Matrix::Identity(20, 20), Nonlinearity::kLinear, Vector::Ones(20), 100, 4);
  EXPECT_TRUE(a.degenerate);
  for (int t : a.peak_time) EXPECT_EQ(t, 0);
  const auto b = peak_activity_ranking(0.9 * Matrix::Identity(20, 20), Nonlinearity::kLinear, Vector::Ones(20), 100, 4);
  EXPECT_EQ(a.order, b.order);
  auto sorted = a.order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(PeakRanking, RecoversPermutedChain) {
  const int n = 30;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 gen(5);
  std::shuffle(perm.begin(), perm.end(), gen);
  // unit perm[k] plays the role of chain position k
  Matrix p = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) p(perm[k], k) = 1.0;
  const Matrix w = p * chain_matrix(n, 1.0) * p.transpose();
  const auto r = peak_activity_ranking(w, Nonlinearity::kLinear, p * e1(n), 100, 1);
  EXPECT_EQ(r.order, perm);
}

TEST(Profile, PureChainSinglePeak) {
  const auto prof = peak_order_profile(chain_matrix(40, 1.0), Nonlinearity::kLinear, e1(40), 100, 1);
  for (std::size_t k = 0; k < prof.offsets.size(); ++k) {
    EXPECT_EQ(prof.mean_weight[k], prof.offsets[k] == 1 ? 1.0 : 0.0) << prof.offsets[k];
    EXPECT_EQ(prof.counts[k], 40 - std::abs(prof.offsets[k]));
  }
  EXPECT_EQ(prof.at(1), 1.0);
}

TEST(Profile, SymmetricMatrixGivesSymmetricProfile) {
  std::mt19937_64 gen(6);
  const Matrix a = oracle::gaussian_matrix(25, 25, gen, 0.1);
  const Matrix w = a + a.transpose();
  const auto prof = peak_order_profile(w, Nonlinearity::kTanh, Vector::Ones(25) / 5.0, 100, 2);
  for (int o = 1; o < 25; ++o) EXPECT_NEAR(prof.at(o), prof.at(-o), 1e-15);
}

TEST(Profile, WeightProfileByHand) {
  Matrix w(3, 3);
  w << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const auto prof = weight_profile(w, {2, 0, 1});
  // reindexed R(a, b) = W(order[a], order[b]) = [[9,7,8],[3,1,2],[6,4,5]]
  EXPECT_DOUBLE_EQ(prof.at(0), (9 + 1 + 5) / 3.0);
  EXPECT_DOUBLE_EQ(prof.at(1), (3 + 4) / 2.0);
  EXPECT_DOUBLE_EQ(prof.at(-1), (7 + 2) / 2.0);
  EXPECT_DOUBLE_EQ(prof.at(2), 6.0);
  EXPECT_DOUBLE_EQ(prof.at(-2), 8.0);
  EXPECT_THROW(prof.at(3), InvalidArgument);
}

TEST(Profile, CountsAlwaysNMinusOffset) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 40);
    const auto prof = peak_order_profile(oracle::gaussian_matrix(n, n, gen, 0.2), Nonlinearity::kElu,
                                         oracle::gaussian_matrix(n, 1, gen), 100, gen());
    ASSERT_EQ(static_cast<int>(prof.offsets.size()), 2 * n - 1);
    for (std::size_t k = 0; k < prof.offsets.size(); ++k) EXPECT_EQ(prof.counts[k], n - std::abs(prof.offsets[k]));
  }
}

TEST(Profile, AverageAndSem) {
  WeightProfile a = weight_profile(Matrix::Constant(2, 2, 1.0), {0, 1});
  WeightProfile b = weight_profile(Matrix::Constant(2, 2, 3.0), {0, 1});
  const auto s = average_profiles({a, b});
  EXPECT_EQ(s.networks, 2);
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    EXPECT_DOUBLE_EQ(s.mean[k], 2.0);
    EXPECT_DOUBLE_EQ(s.sem[k], 1.0);  // sd sqrt(2) over sqrt(2)
  }
}

TEST(PeakRanking, AbsoluteModeFollowsSignFlippingChain) {
  const int n = 8;
  const Matrix w = chain_matrix(n, -1.0);
  Vector pulse = Vector::Zero(n);
  pulse(0) = 1.0;
  const auto raw = peak_activity_ranking(w, Nonlinearity::kLinear, pulse, 20, 1);
  const auto abs = peak_activity_ranking(w, Nonlinearity::kLinear, pulse, 20, 1, PeakMode::kAbsolute);
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(abs.peak_time[i], i);
    EXPECT_EQ(abs.order[i], i);
    // odd units only ever go negative, so their raw peak stays at t = 0
    EXPECT_EQ(raw.peak_time[i], i % 2 ? 0 : i);
  }
}
