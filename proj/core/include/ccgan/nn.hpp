#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ccgan/autodiff.hpp"
#include "ccgan/errors.hpp"

namespace ccgan {

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1 };
enum class OutputActivation : std::uint8_t {
  kLinear = 0,
  kSigmoid = 1,
  kSoftmax = 2,
  kTanh = 3,  // bounded latent head of the reconstruction encoder
};

/// Layer layout of a dense network. An n-layer MLP has n weight matrices,
/// i.e. layer_dims has n+1 entries.
struct MlpSpec {
  std::vector<int> layer_dims;
  Activation hidden_activation = Activation::kRelu;
  OutputActivation output_activation = OutputActivation::kLinear;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return layer_dims.size() - 1; }
  void validate() const;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<Eigen::MatrixXd> weights;    // per layer, in_dim x out_dim
  std::vector<Eigen::RowVectorXd> biases;  // per layer, 1 x out_dim
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

/// Network parameters staged onto a tape for one forward/backward pass.
struct StagedMlp {
  const MlpSpec* spec = nullptr;
  std::vector<ad::Node> weights;
  std::vector<ad::Node> biases;
};

StagedMlp stage(ad::Tape& tape, const MlpParams& params, bool trainable);

/// Full forward pass including the output activation.
ad::Node forward(ad::Tape& tape, const StagedMlp& net, ad::Node x);

/// Forward pass that stops at the final pre-activation (used where batch
/// softmax weighting consumes raw scores).
ad::Node forward_logits(ad::Tape& tape, const StagedMlp& net, ad::Node x);

/// Tape-free forward passes for evaluation paths.
Eigen::MatrixXd forward_values(const MlpParams& params, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward_logits_values(const MlpParams& params, const Eigen::MatrixXd& x);

/// Gradients of one staged network collected off a tape after backward.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;

  static MlpGrads from_tape(const ad::Tape& tape, const StagedMlp& net);
  bool all_finite() const;
};

/// Adam with decoupled weight decay and a stepwise-halving learning-rate
/// schedule. One state per network; t counts completed steps.
struct AdamState {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double base_lr = 1e-4;
  double decay_factor = 0.5;
  int decay_every = 100;
  long t = 0;

  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::RowVectorXd> m_b, v_b;

  static AdamState like(const MlpParams& params, double base_lr, int decay_every);

  /// lr used by the next step: base_lr * decay_factor^floor(t / decay_every).
  double learning_rate() const { return learning_rate_at(t); }
  double learning_rate_at(long step) const;
};

/// Applies one Adam step in place. Throws NumericError (parameters untouched)
/// if any gradient entry is non-finite.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

}  // namespace ccgan
