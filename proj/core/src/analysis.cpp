#include "nonnormal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nonnormal/error.hpp"
#include "nonnormal/init.hpp"
#include "nonnormal/rng.hpp"

namespace nonnormal {

std::string_view to_string(DecodingNetwork kind) {
  return kind == DecodingNetwork::kChain ? "chain" : "orthogonal";
}

DecodingNetwork parse_decoding_network(std::string_view name) {
  if (name == "chain") return DecodingNetwork::kChain;
  if (name == "orthogonal") return DecodingNetwork::kOrthogonal;
  throw InvalidArgument("unknown decoding network '" + std::string(name) + "'");
}

double decoding_r2(const DecodingConfig& cfg) {
  if (cfg.n < 1 || cfg.t_len < 1) throw InvalidArgument("decoding_r2: n and t_len must be positive");
  if (cfg.trials <= cfg.n) throw InvalidArgument("decoding_r2: trials must exceed n");
  if (cfg.noise_sigma < 0) throw InvalidArgument("decoding_r2: noise_sigma must be >= 0");

  Matrix w;
  Vector v = Vector::Zero(cfg.n);
  if (cfg.network == DecodingNetwork::kChain) {
    w = chain_matrix(cfg.n, cfg.scale);
    v(0) = 1.0;
  } else {
    w = cfg.scale * random_orthogonal(cfg.n, cfg.seed);
    Rng rng(cfg.seed, Stream::kDecodingInput);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) v(i) = stddev * rng.gaussian();
  }

  Rng signal_rng(cfg.seed, Stream::kDecodingSignal);
  Rng noise_rng(cfg.seed, Stream::kDecodingNoise);
  Matrix h = Matrix::Zero(cfg.n, cfg.trials);
  Matrix pre(cfg.n, cfg.trials);
  Vector first(cfg.trials);
  Eigen::RowVectorXd s(cfg.trials);
  for (int t = 0; t < cfg.t_len; ++t) {
    for (int k = 0; k < cfg.trials; ++k) s(k) = signal_rng.gaussian();
    if (t == 0) first = s.transpose();
    pre.noalias() = w * h;
    pre.noalias() += v * s;
    if (cfg.noise_sigma > 0) {
      for (int k = 0; k < cfg.trials; ++k) {
        for (int i = 0; i < cfg.n; ++i) pre(i, k) += cfg.noise_sigma * noise_rng.gaussian();
      }
    }
    apply_activation(cfg.nonlinearity, pre, h);
  }
  return least_squares(h.transpose(), first).r_squared;
}

double henrici_index(const Matrix& w) {
  const SchurForm schur = real_schur(w);
  const Matrix& t = schur.t;
  const Eigen::Index n = t.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool block = schur.block_start[static_cast<std::size_t>(i)];
    const Eigen::Index skip = block ? i + 2 : i + 1;
    for (Eigen::Index j = skip; j < n; ++j) sum += t(i, j) * t(i, j);
    if (block) {
      for (Eigen::Index j = i + 2; j < n; ++j) sum += t(i + 1, j) * t(i + 1, j);
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
      sum += (a - d) * (a - d) + (b + c) * (b + c);
      ++i;
    }
  }
  return std::sqrt(sum);
}

double henrici_index_direct(const Matrix& w) {
  double spectrum = 0.0;
  for (const auto& lambda : eigenvalues(w).eigenvalues) spectrum += std::norm(lambda);
  return std::sqrt(std::max(0.0, w.squaredNorm() - spectrum));
}

PeakRanking peak_activity_ranking(const Matrix& w, Nonlinearity f, const Vector& pulse, int steps,
                                  std::uint64_t jitter_seed, PeakMode mode) {
  if (w.rows() != w.cols()) throw InvalidArgument("peak_activity_ranking: W must be square");
  if (pulse.size() != w.rows()) throw InvalidArgument("peak_activity_ranking: pulse has wrong dimension");
  if (steps < 0) throw InvalidArgument("peak_activity_ranking: steps must be >= 0");
  const Eigen::Index n = w.rows();

  Matrix h;
  apply_activation(f, pulse, h);
  auto level = [mode](double x) { return mode == PeakMode::kAbsolute ? std::abs(x) : x; };
  Vector best = h.col(0).unaryExpr(level);
  std::vector<int> peak(static_cast<std::size_t>(n), 0);
  Matrix pre(n, 1);
  for (int t = 1; t <= steps; ++t) {
    pre.noalias() = w * h;
    apply_activation(f, pre, h);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (level(h(i, 0)) > best(i)) {
        best(i) = level(h(i, 0));
        peak[static_cast<std::size_t>(i)] = t;
      }
    }
  }

  Rng rng(jitter_seed, Stream::kJitter);
  std::vector<double> key(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) key[static_cast<std::size_t>(i)] = peak[static_cast<std::size_t>(i)] + rng.uniform(-1e-6, 1e-6);

  PeakRanking out;
  out.peak_time = peak;
  out.order.resize(static_cast<std::size_t>(n));
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](int a, int b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
  out.degenerate = std::all_of(peak.begin(), peak.end(), [](int t) { return t == 0; });
  return out;
}

double WeightProfile::at(int offset) const {
  const auto n = static_cast<int>(counts.size() + 1) / 2;
  if (offset <= -n || offset >= n) throw InvalidArgument("WeightProfile::at: offset out of range");
  return mean_weight[static_cast<std::size_t>(offset + n - 1)];
}

WeightProfile weight_profile(const Matrix& w, const std::vector<int>& order) {
  const auto n = static_cast<int>(w.rows());
  if (w.cols() != n || static_cast<int>(order.size()) != n) {
    throw InvalidArgument("weight_profile: shape mismatch");
  }
  const std::size_t bins = static_cast<std::size_t>(2 * n - 1);
  std::vector<double> sum(bins, 0.0), sum_sq(bins, 0.0);
  WeightProfile out;
  out.counts.assign(bins, 0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double x = w(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
      const auto bin = static_cast<std::size_t>(a - b + n - 1);
      sum[bin] += x;
      sum_sq[bin] += x * x;
      ++out.counts[bin];
    }
  }
  out.offsets.resize(bins);
  out.mean_weight.resize(bins);
  out.sem.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double c = out.counts[k];
    out.offsets[k] = static_cast<int>(k) - (n - 1);
    out.mean_weight[k] = sum[k] / c;
    if (c > 1) {
      const double var = std::max(0.0, (sum_sq[k] - sum[k] * sum[k] / c) / (c - 1));
      out.sem[k] = std::sqrt(var / c);
    } else {
      out.sem[k] = 0.0;
    }
  }
  return out;
}

WeightProfile peak_order_profile(const Matrix& w, Nonlinearity f, const Vector& pulse, int steps,
                                 std::uint64_t jitter_seed, PeakMode mode) {
  const auto ranking = peak_activity_ranking(w, f, pulse, steps, jitter_seed, mode);
  auto profile = weight_profile(w, ranking.order);
  profile.degenerate = ranking.degenerate;
  return profile;
}

ProfileSummary average_profiles(const std::vector<WeightProfile>& profiles) {
  ProfileSummary out;
  if (profiles.empty()) return out;
  out.offsets = profiles.front().offsets;
  out.networks = static_cast<int>(profiles.size());
  const std::size_t bins = out.offsets.size();
  out.mean.assign(bins, 0.0);
  out.sem.assign(bins, 0.0);
  for (const auto& p : profiles) {
    if (p.offsets.size() != bins) throw InvalidArgument("average_profiles: networks differ in size");
    for (std::size_t k = 0; k < bins; ++k) out.mean[k] += p.mean_weight[k];
  }
  const double m = static_cast<double>(profiles.size());
  for (auto& x : out.mean) x /= m;
  if (profiles.size() > 1) {
    for (std::size_t k = 0; k < bins; ++k) {
      double ss = 0.0;
      for (const auto& p : profiles) ss += (p.mean_weight[k] - out.mean[k]) * (p.mean_weight[k] - out.mean[k]);
      out.sem[k] = std::sqrt(ss / (m - 1) / m);
    }
  }
  return out;
}

Vector default_pulse(const RnnParams& params) {
  Vector pulse = params.v * Vector::Ones(params.input_size());
  const double norm = pulse.norm();
  if (norm == 0.0) throw InvalidArgument("default_pulse: input matrix maps the unit input to zero");
  return pulse / norm;
}

}  // namespace nonnormal
