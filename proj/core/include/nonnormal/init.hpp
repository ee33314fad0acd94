#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "nonnormal/linalg.hpp"

namespace nonnormal {

enum class InitKind { kIdentity, kOrthogonal, kChain, kFeedbackChain };

std::string_view to_string(InitKind kind);
InitKind parse_init_kind(std::string_view name);

/// Feedforward weight of the feedback-chain initializer used for training.
inline constexpr double kFeedbackChainForward = 0.99;
/// Scale of the input matrices (both Gaussian std numerator and source gain).
inline constexpr double kInputScale = 0.9;

/// Recurrent initializer choice. Only the fields relevant to `kind` are read:
/// lambda for identity/orthogonal, alpha for chain, beta for feedback_chain.
struct InitSpec {
  InitKind kind = InitKind::kOrthogonal;
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 0.05;
  std::uint64_t seed = 1;

  /// The hyper-parameter this kind is swept over (lambda, alpha or beta).
  double model_parameter() const;
};

/// W_ij = alpha for j = i-1, zero elsewhere.
Matrix chain_matrix(int n, double alpha);
/// W_ij = alpha for j = i-1, beta for j = i+1, zero elsewhere.
Matrix feedback_chain_matrix(int n, double alpha, double beta);

Matrix recurrent_init(const InitSpec& spec, int n);

enum class InputInit { kGaussian, kSource };

/// Gaussian for the normal kinds, source injection for the chain kinds.
InputInit default_input_init(InitKind kind);

/// N×d input matrix. Gaussian: i.i.d. N(0, (0.9/√n)²) drawn row-major from
/// Rng(seed, Stream::kInputInit). Source: 0.9 on the leading d×d diagonal,
/// zero elsewhere (requires n >= d).
Matrix input_init(InputInit kind, int n, int d, std::uint64_t seed);

/// c×N readout with i.i.d. N(0, 1/n) entries from Rng(seed, Stream::kReadoutInit).
Matrix readout_init(int c, int n, std::uint64_t seed);

}  // namespace nonnormal
