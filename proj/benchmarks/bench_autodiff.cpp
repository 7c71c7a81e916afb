// Tape construction, forward evaluation, and reverse-mode gradients on the
// graphs the trainer actually builds, across representation widths.

#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "ccgan/autodiff.hpp"
#include "ccgan/ccgan.hpp"
#include "ccgan/nn.hpp"
#include "ccgan/rng.hpp"

namespace {

using ccgan::ad::Tape;
using Matrix = Eigen::MatrixXd;

Matrix random_batch(ccgan::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

// Dense matmul + bias + relu chain: the per-layer primitive mix with no loss
// logic around it.
void BM_MlpForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  ccgan::Rng rng(1);
  const ccgan::MlpSpec spec{{d, 256, 128, 64, 1},
                            ccgan::Activation::kRelu,
                            ccgan::OutputActivation::kSigmoid};
  const ccgan::MlpParams params = ccgan::init_params(spec, rng.next_u64());
  const Matrix batch = random_batch(rng, 64, d);
  for (auto _ : state) {
    Tape tape;
    const ccgan::StagedMlp net = ccgan::stage(tape, params, false);
    const ccgan::ad::Node out = ccgan::forward(tape, net, tape.constant(batch));
    benchmark::DoNotOptimize(tape.values(out));
  }
}
BENCHMARK(BM_MlpForward)->Arg(16)->Arg(64)->Arg(256);

// Full generator-phase objective: adversarial, cycle, and task terms share
// the generator, so the backward pass accumulates across paths.
void BM_ObjectiveGradient(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  ccgan::Rng rng(2);
  const ccgan::AdaptationModel model = ccgan::init_adaptation_model(
      d, 2, ccgan::CurriculumMode::kModelFree, true, rng.next_u64());
  const Matrix src = random_batch(rng, 64, d);
  const Matrix tgt = random_batch(rng, 64, d);
  std::vector<int> labels(64);
  for (auto& l : labels) l = static_cast<int>(rng.below(2));

  for (auto _ : state) {
    Tape tape;
    const ccgan::StagedMlp g_st = ccgan::stage(tape, model.g_st, true);
    const ccgan::StagedMlp g_ts = ccgan::stage(tape, model.g_ts, true);
    const ccgan::StagedMlp d_t = ccgan::stage(tape, model.d_t, false);
    const ccgan::StagedMlp f_t = ccgan::stage(tape, model.f_t, true);
    const ccgan::ad::Node source = tape.constant(src);
    const ccgan::ad::Node target = tape.constant(tgt);
    const ccgan::ad::Node fake = ccgan::forward(tape, g_st, source);
    const ccgan::ad::Node gen =
        ccgan::losses::gan_losses(tape, d_t, target, fake).gen;
    const ccgan::ad::Node cyc =
        ccgan::losses::cycle_loss(tape, g_st, g_ts, source, target);
    const ccgan::ad::Node task =
        ccgan::losses::task_loss(tape, f_t, g_st, source, labels, 2);
    const ccgan::ad::Node root =
        tape.add(tape.mul(tape.scalar_constant(0.1), gen), tape.add(cyc, task));
    tape.backward(root);
    benchmark::DoNotOptimize(ccgan::MlpGrads::from_tape(tape, g_st));
  }
}
BENCHMARK(BM_ObjectiveGradient)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
