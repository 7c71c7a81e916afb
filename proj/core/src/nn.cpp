#include "ccgan/nn.hpp"

#include <cmath>
#include <cstddef>

#include "ccgan/rng.hpp"

namespace ccgan {

void MlpSpec::validate() const {
  if (layer_dims.size() < 2) {
    throw DimensionError("MlpSpec needs at least an input and an output dim");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw DimensionError("MlpSpec layer dims must be positive");
  }
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams params;
  params.spec = spec;
  params.weights.reserve(spec.num_layers());
  params.biases.reserve(spec.num_layers());
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.layer_dims[l];
    const int fan_out = spec.layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = rng.uniform(-limit, limit);
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::RowVectorXd::Zero(fan_out));
  }
  return params;
}

StagedMlp stage(ad::Tape& tape, const MlpParams& params, bool trainable) {
  params.spec.validate();
  if (params.weights.size() != params.spec.num_layers() ||
      params.biases.size() != params.spec.num_layers()) {
    throw DimensionError("MlpParams layer count does not match its spec");
  }
  StagedMlp net;
  net.spec = &params.spec;
  net.weights.reserve(params.weights.size());
  net.biases.reserve(params.biases.size());
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (params.weights[l].rows() != params.spec.layer_dims[l] ||
        params.weights[l].cols() != params.spec.layer_dims[l + 1] ||
        params.biases[l].cols() != params.spec.layer_dims[l + 1]) {
      throw DimensionError("MlpParams layer shapes do not match its spec");
    }
    if (trainable) {
      net.weights.push_back(tape.input(params.weights[l]));
      net.biases.push_back(tape.input(params.biases[l]));
    } else {
      net.weights.push_back(tape.constant(params.weights[l]));
      net.biases.push_back(tape.constant(params.biases[l]));
    }
  }
  return net;
}

namespace {

ad::Node hidden_act(ad::Tape& tape, Activation act, ad::Node x) {
  switch (act) {
    case Activation::kRelu:
      return tape.relu(x);
    case Activation::kTanh:
      return tape.tanh(x);
  }
  throw ContractError("unknown hidden activation");
}

ad::Node run_layers(ad::Tape& tape, const StagedMlp& net, ad::Node x) {
  const std::size_t n = net.weights.size();
  ad::Node h = x;
  for (std::size_t l = 0; l < n; ++l) {
    h = tape.add(tape.matmul(h, net.weights[l]), net.biases[l]);
    if (l + 1 < n) h = hidden_act(tape, net.spec->hidden_activation, h);
  }
  return h;
}

}  // namespace

ad::Node forward_logits(ad::Tape& tape, const StagedMlp& net, ad::Node x) {
  if (net.spec == nullptr) throw ContractError("forward on an unstaged network");
  return run_layers(tape, net, x);
}

ad::Node forward(ad::Tape& tape, const StagedMlp& net, ad::Node x) {
  ad::Node z = forward_logits(tape, net, x);
  switch (net.spec->output_activation) {
    case OutputActivation::kLinear:
      return z;
    case OutputActivation::kSigmoid:
      return tape.sigmoid(z);
    case OutputActivation::kSoftmax:
      return tape.row_softmax(z);
    case OutputActivation::kTanh:
      return tape.tanh(z);
  }
  throw ContractError("unknown output activation");
}

namespace {

void apply_hidden_values(Activation act, Eigen::MatrixXd& h) {
  switch (act) {
    case Activation::kRelu:
      h = h.cwiseMax(0.0);
      return;
    case Activation::kTanh:
      h = h.array().tanh().matrix();
      return;
  }
  throw ContractError("unknown hidden activation");
}

Eigen::MatrixXd run_layers_values(const MlpParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.spec.input_dim()) {
    throw DimensionError("forward input has wrong feature dim");
  }
  Eigen::MatrixXd h = x;
  const std::size_t n = params.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    h = (h * params.weights[l]).rowwise() + params.biases[l];
    if (l + 1 < n) apply_hidden_values(params.spec.hidden_activation, h);
  }
  return h;
}

double stable_sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Eigen::MatrixXd forward_logits_values(const MlpParams& params, const Eigen::MatrixXd& x) {
  return run_layers_values(params, x);
}

Eigen::MatrixXd forward_values(const MlpParams& params, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = run_layers_values(params, x);
  switch (params.spec.output_activation) {
    case OutputActivation::kLinear:
      return z;
    case OutputActivation::kSigmoid:
      return z.unaryExpr([](double v) { return stable_sigmoid(v); });
    case OutputActivation::kSoftmax: {
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double row_max = z.row(i).maxCoeff();
        Eigen::ArrayXd e = (z.row(i).array() - row_max).exp();
        z.row(i) = (e / e.sum()).matrix();
      }
      return z;
    }
    case OutputActivation::kTanh:
      return z.array().tanh().matrix();
  }
  throw ContractError("unknown output activation");
}

MlpGrads MlpGrads::from_tape(const ad::Tape& tape, const StagedMlp& net) {
  MlpGrads grads;
  grads.weights.reserve(net.weights.size());
  grads.biases.reserve(net.biases.size());
  for (ad::Node w : net.weights) {
    grads.weights.push_back(tape.has_grad(w) ? tape.grad(w)
                                             : Eigen::MatrixXd::Zero(tape.values(w).rows(),
                                                                     tape.values(w).cols()));
  }
  for (ad::Node b : net.biases) {
    Eigen::MatrixXd g = tape.has_grad(b)
                            ? tape.grad(b)
                            : Eigen::MatrixXd::Zero(1, tape.values(b).cols());
    grads.biases.push_back(Eigen::RowVectorXd(g.row(0)));
  }
  return grads;
}

bool MlpGrads::all_finite() const {
  for (const auto& g : weights) {
    if (!g.allFinite()) return false;
  }
  for (const auto& g : biases) {
    if (!g.allFinite()) return false;
  }
  return true;
}

AdamState AdamState::like(const MlpParams& params, double base_lr, int decay_every) {
  AdamState state;
  state.base_lr = base_lr;
  state.decay_every = decay_every;
  state.m_w.reserve(params.weights.size());
  state.v_w.reserve(params.weights.size());
  state.m_b.reserve(params.biases.size());
  state.v_b.reserve(params.biases.size());
  for (const auto& w : params.weights) {
    state.m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    state.v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    state.m_b.push_back(Eigen::RowVectorXd::Zero(b.cols()));
    state.v_b.push_back(Eigen::RowVectorXd::Zero(b.cols()));
  }
  return state;
}

double AdamState::learning_rate_at(long step) const {
  if (decay_every <= 0) return base_lr;
  return base_lr * std::pow(decay_factor, static_cast<double>(step / decay_every));
}

namespace {

// One Adam update on a single parameter block: decoupled weight decay first,
// then the bias-corrected moment step. m/v are the running moments.
template <typename Mat>
void adam_update_block(Mat& param, const Mat& grad, Mat& m, Mat& v, const AdamState& s,
                       double lr, double bc1, double bc2) {
  param -= lr * s.weight_decay * param;
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const Mat m_hat = m / bc1;
  const Mat v_hat = v / bc2;
  param -= lr * (m_hat.array() / (v_hat.array().sqrt() + s.eps)).matrix();
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  if (grads.weights.size() != params.weights.size() ||
      grads.biases.size() != params.biases.size()) {
    throw DimensionError("gradient layer count does not match parameters");
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].cols() != params.biases[l].cols()) {
      throw DimensionError("gradient shapes do not match parameters");
    }
  }
  if (!grads.all_finite()) {
    throw NumericError("non-finite gradient in adam_step; parameters left unchanged");
  }
  const double lr = state.learning_rate();
  const long t_next = state.t + 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t_next));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t_next));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    adam_update_block(params.weights[l], grads.weights[l], state.m_w[l], state.v_w[l],
                      state, lr, bc1, bc2);
    Eigen::RowVectorXd gb = grads.biases[l];
    adam_update_block(params.biases[l], gb, state.m_b[l], state.v_b[l], state, lr, bc1,
                      bc2);
  }
  state.t = t_next;
}

}  // namespace ccgan
