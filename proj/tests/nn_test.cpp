#include "ccgan/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ccgan/checkpoint.hpp"
#include "ccgan/errors.hpp"

namespace ccgan {
namespace {

MlpSpec spec_of(std::vector<int> dims, Activation hidden = Activation::kRelu,
                OutputActivation out = OutputActivation::kLinear) {
  MlpSpec spec;
  spec.layer_dims = std::move(dims);
  spec.hidden_activation = hidden;
  spec.output_activation = out;
  return spec;
}

TEST(InitParams, DeterministicPerSeed) {
  const MlpSpec spec = spec_of({4, 8, 2});
  const MlpParams a = init_params(spec, 17);
  const MlpParams b = init_params(spec, 17);
  const MlpParams c = init_params(spec, 18);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    EXPECT_TRUE(a.weights[l] == b.weights[l]);
    EXPECT_TRUE(a.biases[l] == b.biases[l]);
  }
  EXPECT_FALSE(a.weights[0] == c.weights[0]);
}

TEST(InitParams, BiasesAreZero) {
  const MlpParams p = init_params(spec_of({3, 5, 4}), 1);
  for (const auto& b : p.biases) EXPECT_TRUE(b.isZero(0.0));
}

TEST(InitParams, WeightsFollowGlorotUniformLaw) {
  const MlpParams p = init_params(spec_of({256, 256}), 5);
  const Eigen::MatrixXd& w = p.weights[0];
  const double limit = std::sqrt(6.0 / (256.0 + 256.0));
  EXPECT_LE(w.maxCoeff(), limit);
  EXPECT_GE(w.minCoeff(), -limit);
  // Mean of 256*256 iid Uniform(-limit, limit) draws: std = limit/sqrt(3N).
  const double n = 256.0 * 256.0;
  const double three_sigma = 3.0 * limit / std::sqrt(3.0 * n);
  EXPECT_LE(std::abs(w.mean()), three_sigma);
}

TEST(InitParams, BadLayerDimsAreDimensionErrors) {
  EXPECT_THROW(init_params(spec_of({4, 0, 2}), 1), DimensionError);
  EXPECT_THROW(init_params(spec_of({4}), 1), DimensionError);  // needs >= 2 entries
}

TEST(Forward, ZeroNetGivesZeroOutput) {
  MlpParams p = init_params(spec_of({3, 4, 2}), 9);
  for (auto& w : p.weights) w.setZero();
  const Eigen::MatrixXd out = forward_values(p, Eigen::MatrixXd::Random(5, 3));
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(Forward, SingleLinearLayerEqualsMatmulPlusBias) {
  MlpParams p = init_params(spec_of({3, 2}), 21);
  p.biases[0] << 0.5, -1.5;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd expected = (x * p.weights[0]).rowwise() + p.biases[0];
  EXPECT_TRUE(forward_values(p, x).isApprox(expected, 1e-15));
}

TEST(Forward, TapeAndValueForwardAgree) {
  for (const OutputActivation out :
       {OutputActivation::kLinear, OutputActivation::kSigmoid, OutputActivation::kSoftmax,
        OutputActivation::kTanh}) {
    const MlpParams p = init_params(spec_of({4, 6, 3}, Activation::kTanh, out), 3);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
    ad::Tape tape;
    const StagedMlp staged = stage(tape, p, false);
    const Eigen::MatrixXd on_tape = tape.values(forward(tape, staged, tape.input(x, false)));
    EXPECT_TRUE(on_tape.isApprox(forward_values(p, x), 1e-15));
  }
}

TEST(Forward, DimensionMismatchThrows) {
  const MlpParams p = init_params(spec_of({4, 2}), 2);
  EXPECT_THROW(forward_values(p, Eigen::MatrixXd::Random(3, 5)), DimensionError);
}

TEST(Forward, FiniteDifferenceCheckOn342Net) {
  const MlpParams p = init_params(spec_of({3, 4, 2}, Activation::kTanh), 11);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);

  ad::Tape tape;
  const StagedMlp staged = stage(tape, p, true);
  tape.backward(tape.mean(tape.tanh(forward(tape, staged, tape.input(x, false)))));
  const MlpGrads grads = MlpGrads::from_tape(tape, staged);

  auto loss_at = [&](const MlpParams& q) {
    ad::Tape t;
    const StagedMlp s = stage(t, q, false);
    return t.scalar(t.mean(t.tanh(forward(t, s, t.input(x, false)))));
  };

  const double h = 1e-6;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
        MlpParams plus = p, minus = p;
        plus.weights[l](i, j) += h;
        minus.weights[l](i, j) -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        EXPECT_NEAR(grads.weights[l](i, j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    for (Eigen::Index j = 0; j < p.biases[l].cols(); ++j) {
      MlpParams plus = p, minus = p;
      plus.biases[l](j) += h;
      minus.biases[l](j) -= h;
      const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      EXPECT_NEAR(grads.biases[l](j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

MlpParams scalar_param(double value) {
  MlpParams p = init_params(spec_of({1, 1}), 0);
  p.weights[0](0, 0) = value;
  p.biases[0](0) = 0.0;
  return p;
}

MlpGrads scalar_grad(const MlpParams& like, double g) {
  MlpGrads grads;
  grads.weights.push_back(Eigen::MatrixXd::Constant(1, 1, g));
  grads.biases.push_back(Eigen::RowVectorXd::Zero(1));
  (void)like;
  return grads;
}

TEST(Adam, HandComputedSingleStep) {
  MlpParams p = scalar_param(1.0);
  AdamState state = AdamState::like(p, 1e-4, 100);
  state.weight_decay = 0.0;
  adam_step(p, scalar_grad(p, 1.0), state);
  // m-hat = v-hat = 1 after bias correction, so the update is
  // lr * 1 / (sqrt(1) + eps).
  const double expected = 1.0 - 1e-4 * (1.0 / (1.0 + 1e-8));
  EXPECT_NEAR(p.weights[0](0, 0), expected, 1e-12);
  EXPECT_EQ(state.t, 1);
}

TEST(Adam, LearningRateSchedule) {
  const AdamState state = AdamState::like(scalar_param(1.0), 1e-4, 100);
  for (long t : {0L, 1L, 50L, 99L}) EXPECT_DOUBLE_EQ(state.learning_rate_at(t), 1e-4);
  EXPECT_DOUBLE_EQ(state.learning_rate_at(100), 5e-5);
  EXPECT_DOUBLE_EQ(state.learning_rate_at(199), 5e-5);
  EXPECT_DOUBLE_EQ(state.learning_rate_at(200), 2.5e-5);
  // Non-increasing, piecewise constant with breakpoints at multiples of 100.
  double prev = state.learning_rate_at(0);
  for (long t = 1; t <= 500; ++t) {
    const double lr = state.learning_rate_at(t);
    EXPECT_LE(lr, prev);
    if (t % 100 != 0) EXPECT_DOUBLE_EQ(lr, prev);
    prev = lr;
  }
}

TEST(Adam, ZeroGradZeroDecayLeavesParamsUnchanged) {
  MlpParams p = scalar_param(0.73);
  AdamState state = AdamState::like(p, 1e-4, 100);
  state.weight_decay = 0.0;
  adam_step(p, scalar_grad(p, 0.0), state);
  EXPECT_DOUBLE_EQ(p.weights[0](0, 0), 0.73);
}

TEST(Adam, DescendsConvexBowl) {
  // f(theta) = theta^2 / 2, grad = theta, starting from theta = 1.
  MlpParams p = scalar_param(1.0);
  AdamState state = AdamState::like(p, 1e-4, 100);
  state.weight_decay = 0.0;
  adam_step(p, scalar_grad(p, 1.0), state);
  EXPECT_LT(std::abs(p.weights[0](0, 0)), 1.0);
}

TEST(Adam, NonFiniteGradientLeavesParamsUntouched) {
  MlpParams p = scalar_param(0.5);
  AdamState state = AdamState::like(p, 1e-4, 100);
  const MlpParams before = p;
  EXPECT_THROW(adam_step(p, scalar_grad(p, std::nan("")), state), NumericError);
  EXPECT_EQ(p.weights[0](0, 0), before.weights[0](0, 0));
  EXPECT_EQ(state.t, 0);
}

TEST(Adam, DecoupledWeightDecayShrinksBeforeUpdate) {
  // With zero gradient the only effect is theta -= lr * wd * theta.
  MlpParams p = scalar_param(2.0);
  AdamState state = AdamState::like(p, 1e-4, 100);
  state.weight_decay = 1e-2;
  adam_step(p, scalar_grad(p, 0.0), state);
  EXPECT_DOUBLE_EQ(p.weights[0](0, 0), 2.0 * (1.0 - 1e-4 * 1e-2));
}

TEST(Adam, DeterministicGivenSameInputs) {
  auto run = [] {
    MlpParams p = init_params(spec_of({3, 4, 2}), 4);
    AdamState state = AdamState::like(p, 1e-3, 100);
    MlpGrads grads;
    for (const auto& w : p.weights) grads.weights.push_back(0.1 * w);
    for (const auto& b : p.biases)
      grads.biases.push_back(Eigen::RowVectorXd::Constant(b.cols(), 0.05));
    for (int i = 0; i < 7; ++i) adam_step(p, grads, state);
    return p;
  };
  const MlpParams a = run();
  const MlpParams b = run();
  for (std::size_t l = 0; l < a.weights.size(); ++l) EXPECT_TRUE(a.weights[l] == b.weights[l]);
}

TEST(Checkpoint, RoundTripsParamsAndOptimizerExactly) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "nn_test_roundtrip.ckpt").string();
  MlpParams p = init_params(spec_of({3, 5, 2}, Activation::kTanh, OutputActivation::kSoftmax), 8);
  AdamState state = AdamState::like(p, 2e-4, 50);
  MlpGrads grads;
  for (const auto& w : p.weights) grads.weights.push_back(0.01 * w);
  for (const auto& b : p.biases)
    grads.biases.push_back(Eigen::RowVectorXd::Constant(b.cols(), 0.02));
  for (int i = 0; i < 3; ++i) adam_step(p, grads, state);

  Checkpoint out;
  out.entries.push_back({"net", p, state});
  save_checkpoint(path, out);
  const Checkpoint in = load_checkpoint(path);
  std::filesystem::remove(path);

  ASSERT_EQ(in.entries.size(), 1u);
  const CheckpointEntry& e = in.entries[0];
  EXPECT_EQ(e.name, "net");
  EXPECT_EQ(e.params.spec.layer_dims, p.spec.layer_dims);
  EXPECT_EQ(e.params.spec.hidden_activation, p.spec.hidden_activation);
  EXPECT_EQ(e.params.spec.output_activation, p.spec.output_activation);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    EXPECT_TRUE(e.params.weights[l] == p.weights[l]);  // bit-exact
    EXPECT_TRUE(e.params.biases[l] == p.biases[l]);
  }
  ASSERT_TRUE(e.adam.has_value());
  EXPECT_EQ(e.adam->t, state.t);
  EXPECT_DOUBLE_EQ(e.adam->base_lr, state.base_lr);
  EXPECT_EQ(e.adam->decay_every, state.decay_every);
  for (std::size_t l = 0; l < state.m_w.size(); ++l) {
    EXPECT_TRUE(e.adam->m_w[l] == state.m_w[l]);
    EXPECT_TRUE(e.adam->v_w[l] == state.v_w[l]);
  }
}

TEST(Checkpoint, TruncatedFileIsFormatError) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "nn_test_truncated.ckpt").string();
  Checkpoint out;
  out.entries.push_back({"net", init_params(spec_of({3, 2}), 1), std::nullopt});
  save_checkpoint(path, out);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, WrongMagicIsFormatError) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "nn_test_magic.ckpt").string();
  FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("NOTCKPT", f);
  std::fclose(f);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, MissingFileIsDataError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/path/x.ckpt"), DataError);
}

}  // namespace
}  // namespace ccgan
