#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nonnormal/linalg.hpp"
#include "nonnormal/rnn.hpp"

namespace nonnormal {

enum class DecodingNetwork { kOrthogonal, kChain };

std::string_view to_string(DecodingNetwork kind);
DecodingNetwork parse_decoding_network(std::string_view name);

/// Untrained network driven by i.i.d. N(0,1) scalar signals; asks how well
/// the first signal can be linearly read out of the final state.
struct DecodingConfig {
  DecodingNetwork network = DecodingNetwork::kChain;
  int n = 100;
  int t_len = 100;
  int trials = 250;
  double noise_sigma = 0.0;
  Nonlinearity nonlinearity = Nonlinearity::kLinear;
  double scale = 1.01;
  std::uint64_t seed = 1;
};

/// Simulates h_t = f(W h_{t-1} + v s_t + z_t), z ~ N(0, σ²I), for `trials`
/// independent trials and returns the in-sample R² of regressing s_1 on
/// h_T. Chain: W = scale·shift, v = e₁. Orthogonal: W = scale·Q with
/// Q = random_orthogonal(n, seed), v_i ~ N(0, 1/n).
double decoding_r2(const DecodingConfig& cfg);

/// Departure from normality √(‖W‖_F² − Σ|λ_i|²), evaluated on the real Schur
/// factor T of W as the Frobenius norm of its strictly upper part (2×2
/// blocks contribute (a−d)² + (b+c)²). This equals the clamped radicand form
/// in exact arithmetic but avoids cancelling two O(‖W‖²) quantities.
double henrici_index(const Matrix& w);

/// The literal formula √max(0, ‖W‖_F² − Σ|λ_i|²).
double henrici_index_direct(const Matrix& w);

struct PeakRanking {
  std::vector<int> order;      ///< order[r] = unit with the r-th earliest peak
  std::vector<int> peak_time;  ///< per unit, argmax over t of its activity
  bool degenerate = false;     ///< every unit peaked at t = 0; order is jitter only
};

/// What counts as a unit's peak: its largest activity, or its largest |activity|.
enum class PeakMode { kRaw, kAbsolute };

/// Runs h_0 = f(pulse), h_t = f(W h_{t-1}) for `steps` steps and ranks units
/// by the time of peak activity. Ties are broken by adding
/// U(−1e-6, 1e-6) jitter from Rng(jitter_seed, Stream::kJitter) to the peak times.
PeakRanking peak_activity_ranking(const Matrix& w, Nonlinearity f, const Vector& pulse, int steps,
                                  std::uint64_t jitter_seed, PeakMode mode = PeakMode::kRaw);

/// Mean recurrent weight as a function of the rank difference i − j.
struct WeightProfile {
  std::vector<int> offsets;  ///< −(N−1) .. N−1
  std::vector<double> mean_weight;
  std::vector<double> sem;   ///< standard error of the entries at each offset
  std::vector<int> counts;   ///< N − |offset|
  bool degenerate = false;

  double at(int offset) const;
};

WeightProfile peak_order_profile(const Matrix& w, Nonlinearity f, const Vector& pulse, int steps,
                                 std::uint64_t jitter_seed, PeakMode mode = PeakMode::kRaw);

/// Profile of W after relabelling units by `order` (order[r] = unit at rank r).
WeightProfile weight_profile(const Matrix& w, const std::vector<int>& order);

/// Across-network mean and standard error per offset.
struct ProfileSummary {
  std::vector<int> offsets;
  std::vector<double> mean;
  std::vector<double> sem;
  int networks = 0;
};

ProfileSummary average_profiles(const std::vector<WeightProfile>& profiles);

/// V·1 normalised to unit length: a unit pulse through the trained input pathway.
Vector default_pulse(const RnnParams& params);

}  // namespace nonnormal
