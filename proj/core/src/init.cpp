#include "nonnormal/init.hpp"

#include <cmath>
#include <string>

#include "nonnormal/error.hpp"
#include "nonnormal/rng.hpp"

namespace nonnormal {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw InvalidArgument(std::string("recurrent_init: ") + name + " must be finite and positive");
  }
}

}  // namespace

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::kIdentity: return "identity";
    case InitKind::kOrthogonal: return "orthogonal";
    case InitKind::kChain: return "chain";
    case InitKind::kFeedbackChain: return "feedback_chain";
  }
  return "unknown";
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "identity") return InitKind::kIdentity;
  if (name == "orthogonal") return InitKind::kOrthogonal;
  if (name == "chain") return InitKind::kChain;
  if (name == "feedback_chain" || name == "fbchain") return InitKind::kFeedbackChain;
  throw InvalidArgument("unknown init kind '" + std::string(name) + "'");
}

double InitSpec::model_parameter() const {
  switch (kind) {
    case InitKind::kIdentity:
    case InitKind::kOrthogonal: return lambda;
    case InitKind::kChain: return alpha;
    case InitKind::kFeedbackChain: return beta;
  }
  return 0.0;
}

Matrix chain_matrix(int n, double alpha) {
  return feedback_chain_matrix(n, alpha, 0.0);
}

Matrix feedback_chain_matrix(int n, double alpha, double beta) {
  if (n < 1) throw InvalidArgument("chain matrices need n >= 1");
  Matrix w = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    w(i, i - 1) = alpha;
    w(i - 1, i) = beta;
  }
  return w;
}

Matrix recurrent_init(const InitSpec& spec, int n) {
  if (n < 1) throw InvalidArgument("recurrent_init: n must be >= 1");
  switch (spec.kind) {
    case InitKind::kIdentity:
      require_positive(spec.lambda, "lambda");
      return spec.lambda * Matrix::Identity(n, n);
    case InitKind::kOrthogonal:
      require_positive(spec.lambda, "lambda");
      return spec.lambda * random_orthogonal(n, spec.seed);
    case InitKind::kChain:
      if (n < 2) throw InvalidArgument("recurrent_init: chain needs n >= 2");
      require_positive(spec.alpha, "alpha");
      return chain_matrix(n, spec.alpha);
    case InitKind::kFeedbackChain:
      if (n < 2) throw InvalidArgument("recurrent_init: feedback_chain needs n >= 2");
      require_positive(spec.beta, "beta");
      return feedback_chain_matrix(n, kFeedbackChainForward, spec.beta);
  }
  throw InvalidArgument("recurrent_init: invalid kind");
}

InputInit default_input_init(InitKind kind) {
  return kind == InitKind::kChain || kind == InitKind::kFeedbackChain ? InputInit::kSource
                                                                      : InputInit::kGaussian;
}

Matrix input_init(InputInit kind, int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("input_init: dimensions must be positive");
  if (kind == InputInit::kSource) {
    if (n < d) {
      throw InvalidArgument("input_init: source injection needs n >= d (n=" + std::to_string(n) +
                            ", d=" + std::to_string(d) + ")");
    }
    Matrix v = Matrix::Zero(n, d);
    v.topRows(d).diagonal().setConstant(kInputScale);
    return v;
  }
  Rng rng(seed, Stream::kInputInit);
  const double stddev = kInputScale / std::sqrt(static_cast<double>(n));
  Matrix v(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) v(i, j) = stddev * rng.gaussian();
  }
  return v;
}

Matrix readout_init(int c, int n, std::uint64_t seed) {
  if (c < 1 || n < 1) throw InvalidArgument("readout_init: dimensions must be positive");
  Rng rng(seed, Stream::kReadoutInit);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix w(c, n);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < n; ++j) w(i, j) = stddev * rng.gaussian();
  }
  return w;
}

}  // namespace nonnormal
