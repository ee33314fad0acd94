#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nonnormal/init.hpp"
#include "nonnormal/linalg.hpp"

namespace nonnormal {

enum class Nonlinearity { kElu, kRelu, kTanh, kLinear };

std::string_view to_string(Nonlinearity f);
Nonlinearity parse_nonlinearity(std::string_view name);

struct ActivationValue {
  double value;
  double derivative;
};

/// f(x) and f'(x). elu(x) = x for x > 0, eˣ − 1 otherwise; relu'(0) = 0.
ActivationValue activation(Nonlinearity f, double x);

/// Elementwise f over a matrix of pre-activations.
void apply_activation(Nonlinearity f, const Matrix& pre, Matrix& out);

/// f'(pre) recovered from post = f(pre); exact for all four kinds.
void derivative_from_output(Nonlinearity f, const Matrix& post, Matrix& out);

/// Trainable state of a vanilla RNN:
///   h_t = f(W h_{t-1} + V x_t + b),  y_t = W_out h_t + b_out.
struct RnnParams {
  Matrix w;      ///< N×N recurrent
  Matrix v;      ///< N×d input
  Vector b;      ///< N recurrent bias
  Matrix w_out;  ///< c×N readout
  Vector b_out;  ///< c readout bias

  int hidden_size() const { return static_cast<int>(w.rows()); }
  int input_size() const { return static_cast<int>(v.cols()); }
  int output_size() const { return static_cast<int>(w_out.rows()); }

  static RnnParams zeros(int n, int d, int c);
  RnnParams zeros_like() const { return zeros(hidden_size(), input_size(), output_size()); }
  bool all_finite() const;

  /// Contiguous storage of w, v, b, w_out, b_out in that order.
  std::array<std::span<double>, 5> arrays();
  std::array<std::span<const double>, 5> arrays() const;
};

inline constexpr std::array<std::string_view, 5> kParamNames{"w", "v", "b", "w_out", "b_out"};

/// Recurrent and input matrices from the initializer, Gaussian readout with
/// std 1/√n, zero biases.
RnnParams initial_params(const InitSpec& spec, int n, int d, int c);

/// One Matrix per time step; column b holds batch element b.
using Sequence = std::vector<Matrix>;

enum class LossKind { kMse, kCrossEntropy };

std::string_view to_string(LossKind kind);

/// Per-step targets. Cross-entropy reads `classes[t][b]`; mse reads the
/// c×B matrix `values[t]`. Only masked steps are consulted.
struct Targets {
  std::vector<std::vector<int>> classes;
  Sequence values;
};

struct ForwardResult {
  Sequence hidden;   ///< N×B per step
  Sequence outputs;  ///< c×B per step
};

/// Runs the network over `inputs` (d×B per step) from h0 (zero if absent).
/// Throws DivergenceError naming the first step with non-finite activity.
ForwardResult forward(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                      const std::optional<Vector>& h0 = std::nullopt);

struct LossAndGrads {
  double loss = 0.0;
  RnnParams grads;
};

/// Masked mean loss over the batch and its exact gradient by
/// backpropagation through time. The loss averages over batch elements and
/// masked steps; mse additionally averages over output components.
LossAndGrads bptt(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                  const Targets& targets, const std::vector<bool>& mask, LossKind loss);

struct LossEval {
  double loss = 0.0;
  double accuracy = 0.0;  ///< cross-entropy only: fraction of argmax hits
};

/// Forward-only masked loss; same normalisation as bptt.
LossEval evaluate_loss(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                       const Targets& targets, const std::vector<bool>& mask, LossKind loss);

struct RmspropOptions {
  double learning_rate = 1e-4;
  double decay = 0.9;
  double epsilon = 1e-8;
};

struct RmspropState {
  RnnParams mean_square;
  RmspropOptions options;

  static RmspropState for_params(const RnnParams& params, const RmspropOptions& options);
};

/// acc ← decay·acc + (1−decay)·g²;  p ← p − lr·g/(√acc + ε).
/// Throws DivergenceError if any parameter becomes non-finite.
void rmsprop_step(RmspropState& state, RnnParams& params, const RnnParams& grads);

}  // namespace nonnormal
