#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <utility>

#include "../support/instances.hpp"
#include "../support/oracles.hpp"
#include "nonnormal/error.hpp"
#include "nonnormal/init.hpp"
#include "nonnormal/rnn.hpp"

using namespace nonnormal;

namespace {

constexpr Nonlinearity kAll[] = {Nonlinearity::kElu, Nonlinearity::kRelu, Nonlinearity::kTanh, Nonlinearity::kLinear};

}  // namespace

TEST(Activation, PointValues) {
  EXPECT_EQ(activation(Nonlinearity::kElu, 0.0).value, 0.0);
  EXPECT_EQ(activation(Nonlinearity::kElu, 0.0).derivative, 1.0);
  EXPECT_NEAR(activation(Nonlinearity::kElu, -1.0).value, std::exp(-1.0) - 1, 1e-15);
  EXPECT_EQ(activation(Nonlinearity::kRelu, -2.0).value, 0.0);
  EXPECT_EQ(activation(Nonlinearity::kRelu, -2.0).derivative, 0.0);
  EXPECT_EQ(activation(Nonlinearity::kRelu, 3.0).derivative, 1.0);
  EXPECT_NEAR(activation(Nonlinearity::kTanh, 30.0).value, 1.0, 1e-15);
  EXPECT_LT(activation(Nonlinearity::kTanh, 30.0).derivative, 1e-20);
}

TEST(Activation, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-4, 4);
  for (auto f : kAll) {
    for (int i = 0; i < 500; ++i) {
      const double x = u(gen);
      if (f == Nonlinearity::kRelu && std::abs(x) < 1e-3) continue;
      const double h = 1e-6;
      const double fd = (activation(f, x + h).value - activation(f, x - h).value) / (2 * h);
      EXPECT_NEAR(activation(f, x).derivative, fd, 1e-7) << to_string(f) << " x=" << x;
    }
  }
}

TEST(Activation, DerivativeFromOutputAgrees) {
  std::mt19937_64 gen(2);
  for (auto f : kAll) {
    const Matrix pre = oracle::gaussian_matrix(7, 9, gen, 2.0);
    Matrix post, d;
    apply_activation(f, pre, post);
    derivative_from_output(f, post, d);
    for (int i = 0; i < pre.size(); ++i) {
      const auto a = activation(f, pre(i));
      EXPECT_NEAR(post(i), a.value, 1e-15);
      EXPECT_NEAR(d(i), a.derivative, 1e-15);
    }
  }
}

TEST(Activation, ParseRoundTrip) {
  for (auto f : kAll) EXPECT_EQ(parse_nonlinearity(to_string(f)), f);
  EXPECT_THROW(parse_nonlinearity("sigmoid"), InvalidArgument);
}

TEST(Forward, LinearChainIsDelayLine) {
  const int n = 6, t_len = 10;
  RnnParams p = RnnParams::zeros(n, 1, 1);
  p.w = chain_matrix(n, 1.0);
  p.v(0, 0) = 1.0;
  Sequence inputs;
  for (int t = 0; t < t_len; ++t) inputs.push_back(Matrix::Constant(1, 1, t + 1.0));
  const auto out = forward(p, Nonlinearity::kLinear, inputs);
  for (int t = 0; t < t_len; ++t) {
    for (int k = 0; k < n; ++k) {
      const double expect = k <= t ? static_cast<double>(t - k + 1) : 0.0;
      EXPECT_EQ(out.hidden[t](k, 0), expect);
    }
  }
}

TEST(Forward, ZeroNetworkOutputsReadoutBias) {
  RnnParams p = RnnParams::zeros(4, 2, 3);
  p.b_out << 0.5, -1, 2;
  std::mt19937_64 gen(3);
  Sequence inputs{oracle::gaussian_matrix(2, 5, gen), oracle::gaussian_matrix(2, 5, gen)};
  for (const auto& y : forward(p, Nonlinearity::kElu, inputs).outputs) {
    for (int b = 0; b < 5; ++b) EXPECT_EQ(y.col(b), p.b_out);
  }
}

TEST(Forward, MatchesScalarLoopOracle) {
  std::mt19937_64 gen(4);
  for (auto f : kAll) {
    for (int trial = 0; trial < 10; ++trial) {
      auto prob = instances::random_problem(gen, f, LossKind::kMse);
      const auto out = forward(prob.params, f, prob.inputs);
      std::vector<std::vector<std::vector<double>>> hidden;
      const auto y = oracle::run(instances::to_oracle(prob.params), instances::oracle_activation(f),
                                 instances::to_oracle(prob.inputs), &hidden);
      for (std::size_t t = 0; t < y.size(); ++t)
        for (std::size_t b = 0; b < y[t].size(); ++b) {
          for (std::size_t o = 0; o < y[t][b].size(); ++o) EXPECT_NEAR(out.outputs[t](o, b), y[t][b][o], 1e-12);
          for (std::size_t i = 0; i < hidden[t][b].size(); ++i) EXPECT_NEAR(out.hidden[t](i, b), hidden[t][b][i], 1e-12);
        }
    }
  }
}

TEST(Forward, NonFiniteActivityReportsStep) {
  RnnParams p = RnnParams::zeros(2, 1, 1);
  p.w = 1e200 * Matrix::Identity(2, 2);
  p.v.setConstant(1.0);
  Sequence inputs(5, Matrix::Ones(1, 1));
  try {
    forward(p, Nonlinearity::kLinear, inputs);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

TEST(Bptt, ZeroMaskGivesZeroLossAndGrads) {
  std::mt19937_64 gen(5);
  auto prob = instances::random_problem(gen, Nonlinearity::kTanh, LossKind::kCrossEntropy);
  std::fill(prob.mask.begin(), prob.mask.end(), false);
  const auto lg = bptt(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss);
  EXPECT_EQ(lg.loss, 0.0);
  for (auto a : lg.grads.arrays())
    for (double g : a) EXPECT_EQ(g, 0.0);
}

TEST(Bptt, UniformLogitsGiveLogC) {
  for (int c : {2, 9, 10}) {
    RnnParams p = RnnParams::zeros(3, 1, c);
    Sequence inputs(4, Matrix::Ones(1, 2));
    Targets targets;
    targets.classes.assign(4, std::vector<int>{0, c - 1});
    const auto ev = evaluate_loss(p, Nonlinearity::kElu, inputs, targets, {true, false, true, true}, LossKind::kCrossEntropy);
    EXPECT_NEAR(ev.loss, std::log(static_cast<double>(c)), 1e-14);
  }
}

TEST(Bptt, SpecificTanhMseInstance) {
  // N=4, T=6, batch=2 against central differences with step 1e-5.
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto prob = instances::random_problem(gen, Nonlinearity::kTanh, LossKind::kMse);
    const auto check = instances::check_gradient(prob);
    EXPECT_LT(check.max_rel_error, 1e-4);
    EXPECT_LT(check.max_coord_rel, 1e-4);
  }
}

TEST(Bptt, AllNonlinearitiesAndLossesMatchFiniteDifferences) {
  std::mt19937_64 gen(7);
  int checked = 0;
  while (checked < 120) {
    const auto f = kAll[gen() % 4];
    const auto loss = gen() % 2 ? LossKind::kMse : LossKind::kCrossEntropy;
    auto prob = instances::random_problem(gen, f, loss);
    if (f == Nonlinearity::kRelu && instances::min_abs_preactivation(prob) < 1e-3) continue;
    const auto check = instances::check_gradient(prob);
    EXPECT_LT(check.max_rel_error, 1e-4) << to_string(f) << " " << to_string(loss);
    ++checked;
  }
}

TEST(Bptt, LossMatchesOracleAndEvaluate) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto prob = instances::random_problem(gen, kAll[trial % 4], trial % 2 ? LossKind::kMse : LossKind::kCrossEntropy);
    const auto lg = bptt(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss);
    EXPECT_NEAR(lg.loss, instances::oracle_loss(prob, prob.params), 1e-12);
    EXPECT_EQ(lg.loss, evaluate_loss(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss).loss);
  }
}

TEST(Bptt, BatchIsAverageOfSamples) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto prob = instances::random_problem(gen, kAll[trial % 4], trial % 2 ? LossKind::kMse : LossKind::kCrossEntropy);
    const auto whole = bptt(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss);
    const auto batch = prob.inputs.front().cols();
    double loss = 0;
    RnnParams grads = prob.params.zeros_like();
    for (Eigen::Index b = 0; b < batch; ++b) {
      Sequence inputs;
      Targets targets;
      for (std::size_t t = 0; t < prob.inputs.size(); ++t) {
        inputs.push_back(prob.inputs[t].col(b));
        targets.classes.push_back({prob.targets.classes[t][b]});
        targets.values.push_back(prob.targets.values[t].col(b));
      }
      const auto one = bptt(prob.params, prob.f, inputs, targets, prob.mask, prob.loss);
      loss += one.loss / batch;
      auto ga = grads.arrays();
      const auto oa = one.grads.arrays();
      for (std::size_t a = 0; a < ga.size(); ++a)
        for (std::size_t i = 0; i < ga[a].size(); ++i) ga[a][i] += oa[a][i] / batch;
    }
    EXPECT_NEAR(whole.loss, loss, 1e-10);
    const auto wa = whole.grads.arrays();
    const auto ga = std::as_const(grads).arrays();
    for (std::size_t a = 0; a < wa.size(); ++a)
      for (std::size_t i = 0; i < wa[a].size(); ++i) EXPECT_NEAR(wa[a][i], ga[a][i], 1e-10);
  }
}

TEST(Bptt, Deterministic) {
  std::mt19937_64 gen(10);
  auto prob = instances::random_problem(gen, Nonlinearity::kElu, LossKind::kCrossEntropy);
  const auto a = bptt(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss);
  const auto b = bptt(prob.params, prob.f, prob.inputs, prob.targets, prob.mask, prob.loss);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grads.w, b.grads.w);
}

TEST(Bptt, RejectsMismatchedShapes) {
  RnnParams p = RnnParams::zeros(3, 2, 2);
  Sequence inputs{Matrix::Ones(3, 1)};
  Targets targets;
  targets.values = {Matrix::Zero(2, 1)};
  EXPECT_THROW(bptt(p, Nonlinearity::kElu, inputs, targets, {true}, LossKind::kMse), InvalidArgument);
}

TEST(Rmsprop, ZeroGradientLeavesParams) {
  std::mt19937_64 gen(11);
  auto prob = instances::random_problem(gen, Nonlinearity::kElu, LossKind::kMse);
  RnnParams p = prob.params;
  auto state = RmspropState::for_params(p, {});
  rmsprop_step(state, p, p.zeros_like());
  EXPECT_EQ(p.w, prob.params.w);
  EXPECT_EQ(p.b_out, prob.params.b_out);
}

TEST(Rmsprop, FirstStepAlgebra) {
  RnnParams p = RnnParams::zeros(1, 1, 1);
  RnnParams g = p.zeros_like();
  g.w(0, 0) = 0.2;
  g.b_out(0) = -3.0;
  auto state = RmspropState::for_params(p, {1e-3, 0.9, 1e-8});
  rmsprop_step(state, p, g);
  EXPECT_NEAR(state.mean_square.w(0, 0), 0.1 * 0.04, 1e-18);
  EXPECT_NEAR(p.w(0, 0), -1e-3 * 0.2 / (std::sqrt(0.1) * 0.2 + 1e-8), 1e-15);
  EXPECT_NEAR(p.b_out(0), 1e-3 * 3.0 / (std::sqrt(0.1) * 3.0 + 1e-8), 1e-15);
}

TEST(Rmsprop, ConstantGradientStepApproachesLearningRate) {
  RnnParams p = RnnParams::zeros(2, 1, 1);
  RnnParams g = p.zeros_like();
  g.w.setConstant(0.37);
  g.v.setConstant(-5.0);
  auto state = RmspropState::for_params(p, {1e-2, 0.9, 1e-8});
  RnnParams before = p;
  for (int i = 0; i < 400; ++i) {
    before = p;
    rmsprop_step(state, p, g);
  }
  EXPECT_NEAR(before.w(0, 0) - p.w(0, 0), 1e-2, 1e-8);
  EXPECT_NEAR(p.v(0, 0) - before.v(0, 0), 1e-2, 1e-8);
  for (auto a : std::as_const(state).mean_square.arrays())
    for (double x : a) EXPECT_GE(x, 0.0);
}

TEST(Rmsprop, NonFiniteUpdateIsDivergence) {
  RnnParams p = RnnParams::zeros(1, 1, 1);
  RnnParams g = p.zeros_like();
  g.w(0, 0) = std::nan("");
  auto state = RmspropState::for_params(p, {});
  EXPECT_THROW(rmsprop_step(state, p, g), DivergenceError);
}

TEST(InitialParams, ShapesAndReadout) {
  InitSpec spec;
  spec.kind = InitKind::kChain;
  spec.alpha = 1.02;
  const auto p = initial_params(spec, 100, 10, 9);
  EXPECT_EQ(p.w, chain_matrix(100, 1.02));
  EXPECT_EQ(p.v(0, 0), 0.9);
  EXPECT_EQ(p.b, Vector::Zero(100));
  EXPECT_EQ(p.b_out, Vector::Zero(9));
  const double sd = std::sqrt(p.w_out.squaredNorm() / p.w_out.size());
  EXPECT_NEAR(sd, 0.1, 0.01);
}
