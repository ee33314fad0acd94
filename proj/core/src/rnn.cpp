#include "nonnormal/rnn.hpp"

#include <cmath>
#include <string>

#include "nonnormal/error.hpp"

namespace nonnormal {

std::string_view to_string(Nonlinearity f) {
  switch (f) {
    case Nonlinearity::kElu: return "elu";
    case Nonlinearity::kRelu: return "relu";
    case Nonlinearity::kTanh: return "tanh";
    case Nonlinearity::kLinear: return "linear";
  }
  return "unknown";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "elu") return Nonlinearity::kElu;
  if (name == "relu") return Nonlinearity::kRelu;
  if (name == "tanh") return Nonlinearity::kTanh;
  if (name == "linear") return Nonlinearity::kLinear;
  throw InvalidArgument("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kMse ? "mse" : "cross_entropy";
}

ActivationValue activation(Nonlinearity f, double x) {
  switch (f) {
    case Nonlinearity::kElu:
      if (x > 0) return {x, 1.0};
      return {std::expm1(x), std::exp(x)};
    case Nonlinearity::kRelu:
      return x > 0 ? ActivationValue{x, 1.0} : ActivationValue{0.0, 0.0};
    case Nonlinearity::kTanh: {
      const double y = std::tanh(x);
      return {y, 1.0 - y * y};
    }
    case Nonlinearity::kLinear:
      return {x, 1.0};
  }
  return {x, 1.0};
}

void apply_activation(Nonlinearity f, const Matrix& pre, Matrix& out) {
  switch (f) {
    case Nonlinearity::kElu:
      out = (pre.array() > 0.0).select(pre, pre.array().exp() - 1.0);
      break;
    case Nonlinearity::kRelu:
      out = pre.cwiseMax(0.0);
      break;
    case Nonlinearity::kTanh:
      out = pre.array().tanh();
      break;
    case Nonlinearity::kLinear:
      out = pre;
      break;
  }
}

void derivative_from_output(Nonlinearity f, const Matrix& post, Matrix& out) {
  switch (f) {
    case Nonlinearity::kElu:
      out = (post.array() > 0.0).select(Matrix::Ones(post.rows(), post.cols()), post.array() + 1.0);
      break;
    case Nonlinearity::kRelu:
      out = (post.array() > 0.0).cast<double>();
      break;
    case Nonlinearity::kTanh:
      out = 1.0 - post.array().square();
      break;
    case Nonlinearity::kLinear:
      out.setOnes(post.rows(), post.cols());
      break;
  }
}

RnnParams RnnParams::zeros(int n, int d, int c) {
  return RnnParams{Matrix::Zero(n, n), Matrix::Zero(n, d), Vector::Zero(n), Matrix::Zero(c, n),
                   Vector::Zero(c)};
}

bool RnnParams::all_finite() const {
  return w.allFinite() && v.allFinite() && b.allFinite() && w_out.allFinite() && b_out.allFinite();
}

std::array<std::span<double>, 5> RnnParams::arrays() {
  auto view = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {view(w), view(v), view(b), view(w_out), view(b_out)};
}

std::array<std::span<const double>, 5> RnnParams::arrays() const {
  auto view = [](const auto& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  return {view(w), view(v), view(b), view(w_out), view(b_out)};
}

RnnParams initial_params(const InitSpec& spec, int n, int d, int c) {
  RnnParams p = RnnParams::zeros(n, d, c);
  p.w = recurrent_init(spec, n);
  p.v = input_init(default_input_init(spec.kind), n, d, spec.seed);
  p.w_out = readout_init(c, n, spec.seed);
  return p;
}

namespace {

void check_inputs(const RnnParams& params, const Sequence& inputs) {
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (inputs[t].rows() != params.input_size() || inputs[t].cols() != inputs.front().cols()) {
      throw InvalidArgument("rnn: input at step " + std::to_string(t) + " has shape " +
                            std::to_string(inputs[t].rows()) + "x" + std::to_string(inputs[t].cols()));
    }
  }
}

void check_targets(const Sequence& inputs, const Targets& targets, const std::vector<bool>& mask,
                   LossKind loss) {
  if (mask.size() != inputs.size()) throw InvalidArgument("rnn: mask length must equal sequence length");
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    if (loss == LossKind::kCrossEntropy) {
      if (targets.classes.size() != mask.size()) throw InvalidArgument("rnn: missing class targets");
    } else if (targets.values.size() != mask.size()) {
      throw InvalidArgument("rnn: missing real-valued targets");
    }
  }
}

Matrix initial_state(const RnnParams& params, Eigen::Index batch, const std::optional<Vector>& h0) {
  Matrix h = Matrix::Zero(params.hidden_size(), batch);
  if (h0) {
    if (h0->size() != params.hidden_size()) throw InvalidArgument("rnn: h0 has wrong dimension");
    h.colwise() = *h0;
  }
  return h;
}

// Loss summed over the batch at one step, and (optionally) d(loss)/d(outputs)
// scaled by `scale`. Returns the number of argmax hits for cross-entropy.
double step_loss(const Matrix& y, const Targets& targets, std::size_t t, LossKind loss, double scale,
                 Matrix* dy, long* hits) {
  const Eigen::Index c = y.rows();
  const Eigen::Index batch = y.cols();
  double total = 0.0;
  if (dy) dy->resize(c, batch);
  if (loss == LossKind::kCrossEntropy) {
    const auto& labels = targets.classes[t];
    if (static_cast<Eigen::Index>(labels.size()) != batch) {
      throw InvalidArgument("rnn: class targets at step " + std::to_string(t) + " have wrong batch size");
    }
    for (Eigen::Index col = 0; col < batch; ++col) {
      const int label = labels[static_cast<std::size_t>(col)];
      if (label < 0 || label >= c) throw InvalidArgument("rnn: class target out of range");
      Eigen::Index best;
      const double top = y.col(col).maxCoeff(&best);
      const double norm = (y.col(col).array() - top).exp().sum();
      const double log_z = top + std::log(norm);
      total += log_z - y(label, col);
      if (hits && best == label) ++*hits;
      if (dy) {
        dy->col(col) = (y.col(col).array() - log_z).exp() * scale;
        (*dy)(label, col) -= scale;
      }
    }
  } else {
    const Matrix& target = targets.values[t];
    if (target.rows() != c || target.cols() != batch) {
      throw InvalidArgument("rnn: value targets at step " + std::to_string(t) + " have wrong shape");
    }
    const Matrix diff = y - target;
    total = diff.squaredNorm() / static_cast<double>(c);
    if (dy) *dy = diff * (2.0 * scale / static_cast<double>(c));
  }
  return total;
}

}  // namespace

ForwardResult forward(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                      const std::optional<Vector>& h0) {
  ForwardResult out;
  if (inputs.empty()) return out;
  check_inputs(params, inputs);
  const Eigen::Index batch = inputs.front().cols();
  Matrix h = initial_state(params, batch, h0);
  Matrix pre(params.hidden_size(), batch);
  out.hidden.reserve(inputs.size());
  out.outputs.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    pre.noalias() = params.w * h;
    pre.noalias() += params.v * inputs[t];
    pre.colwise() += params.b;
    apply_activation(f, pre, h);
    if (!h.allFinite()) {
      throw DivergenceError("rnn: non-finite activity at time step " + std::to_string(t),
                            static_cast<long>(t));
    }
    Matrix y = params.w_out * h;
    y.colwise() += params.b_out;
    out.hidden.push_back(h);
    out.outputs.push_back(std::move(y));
  }
  return out;
}

LossAndGrads bptt(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                  const Targets& targets, const std::vector<bool>& mask, LossKind loss) {
  LossAndGrads result{0.0, params.zeros_like()};
  if (inputs.empty()) return result;
  check_inputs(params, inputs);
  check_targets(inputs, targets, mask, loss);

  const std::size_t steps = inputs.size();
  const Eigen::Index batch = inputs.front().cols();
  const Eigen::Index n = params.hidden_size();
  long masked = 0;
  for (bool m : mask) masked += m ? 1 : 0;
  if (masked == 0) return result;
  const double scale = 1.0 / (static_cast<double>(batch) * static_cast<double>(masked));

  // hidden[0] is the initial state; hidden[t + 1] follows input t.
  Sequence hidden;
  hidden.reserve(steps + 1);
  hidden.push_back(Matrix::Zero(n, batch));
  Matrix pre(n, batch);
  for (std::size_t t = 0; t < steps; ++t) {
    pre.noalias() = params.w * hidden.back();
    pre.noalias() += params.v * inputs[t];
    pre.colwise() += params.b;
    Matrix h;
    apply_activation(f, pre, h);
    if (!h.allFinite()) {
      throw DivergenceError("rnn: non-finite activity at time step " + std::to_string(t),
                            static_cast<long>(t));
    }
    hidden.push_back(std::move(h));
  }

  RnnParams& g = result.grads;
  Matrix dh = Matrix::Zero(n, batch);
  Matrix da(n, batch);
  Matrix deriv(n, batch);
  Matrix y, dy;
  // Summed in forward order afterwards so the loss matches evaluate_loss bit for bit.
  std::vector<double> step_losses(steps, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const Matrix& h = hidden[t + 1];
    if (mask[t]) {
      y.noalias() = params.w_out * h;
      y.colwise() += params.b_out;
      step_losses[t] = step_loss(y, targets, t, loss, scale, &dy, nullptr);
      g.w_out.noalias() += dy * h.transpose();
      g.b_out += dy.rowwise().sum();
      dh.noalias() += params.w_out.transpose() * dy;
    }
    derivative_from_output(f, h, deriv);
    da = dh.cwiseProduct(deriv);
    g.w.noalias() += da * hidden[t].transpose();
    g.v.noalias() += da * inputs[t].transpose();
    g.b += da.rowwise().sum();
    dh.noalias() = params.w.transpose() * da;
  }
  double total = 0.0;
  for (double l : step_losses) total += l;
  result.loss = total / (static_cast<double>(batch) * static_cast<double>(masked));
  if (!std::isfinite(result.loss)) throw DivergenceError("rnn: non-finite loss", -1);
  return result;
}

LossEval evaluate_loss(const RnnParams& params, Nonlinearity f, const Sequence& inputs,
                       const Targets& targets, const std::vector<bool>& mask, LossKind loss) {
  LossEval eval;
  if (inputs.empty()) return eval;
  check_inputs(params, inputs);
  check_targets(inputs, targets, mask, loss);
  const Eigen::Index batch = inputs.front().cols();
  long masked = 0;
  for (bool m : mask) masked += m ? 1 : 0;
  if (masked == 0) return eval;

  Matrix h = Matrix::Zero(params.hidden_size(), batch);
  Matrix pre(params.hidden_size(), batch);
  Matrix y;
  double total = 0.0;
  long hits = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    pre.noalias() = params.w * h;
    pre.noalias() += params.v * inputs[t];
    pre.colwise() += params.b;
    apply_activation(f, pre, h);
    if (!h.allFinite()) {
      throw DivergenceError("rnn: non-finite activity at time step " + std::to_string(t),
                            static_cast<long>(t));
    }
    if (!mask[t]) continue;
    y.noalias() = params.w_out * h;
    y.colwise() += params.b_out;
    total += step_loss(y, targets, t, loss, 1.0, nullptr, &hits);
  }
  const double denom = static_cast<double>(batch) * static_cast<double>(masked);
  eval.loss = total / denom;
  eval.accuracy = loss == LossKind::kCrossEntropy ? static_cast<double>(hits) / denom : 0.0;
  return eval;
}

RmspropState RmspropState::for_params(const RnnParams& params, const RmspropOptions& options) {
  return RmspropState{params.zeros_like(), options};
}

void rmsprop_step(RmspropState& state, RnnParams& params, const RnnParams& grads) {
  const auto& o = state.options;
  auto p = params.arrays();
  auto acc = state.mean_square.arrays();
  const auto g = grads.arrays();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size() || p[k].size() != acc[k].size()) {
      throw InvalidArgument("rmsprop_step: shape mismatch in '" + std::string(kParamNames[k]) + "'");
    }
    using Arr = Eigen::Map<Eigen::ArrayXd>;
    using ConstArr = Eigen::Map<const Eigen::ArrayXd>;
    const auto size = static_cast<Eigen::Index>(p[k].size());
    Arr pk(p[k].data(), size);
    Arr ak(acc[k].data(), size);
    ConstArr gk(g[k].data(), size);
    ak = o.decay * ak + (1.0 - o.decay) * gk.square();
    pk -= o.learning_rate * gk / (ak.sqrt() + o.epsilon);
  }
  if (!params.all_finite()) throw DivergenceError("rmsprop: parameters became non-finite", -1);
}

}  // namespace nonnormal
