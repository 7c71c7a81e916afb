// End-to-end training-step throughput and the per-batch curriculum weight
// computation, on a synthetic two-source task.

#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <vector>

#include "ccgan/ccgan.hpp"
#include "ccgan/eval.hpp"
#include "ccgan/rng.hpp"
#include "ccgan/synth_data.hpp"

namespace {

using Matrix = Eigen::MatrixXd;

struct FixedBatches {
  Matrix source;
  std::vector<int> labels;
  Matrix target;
};

FixedBatches first_rows(const ccgan::MultiSourceTask& task, int batch) {
  FixedBatches b;
  b.source = task.sources[0].z.topRows(batch);
  b.labels.assign(task.sources[0].labels.begin(),
                  task.sources[0].labels.begin() + batch);
  b.target = task.target.z.topRows(batch);
  return b;
}

void BM_TrainStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ccgan::MultiSourceTask task =
      ccgan::make_multisource_task(2, {0.5, 1.5}, d, 1.0, 256, 5, 2, 2.0);
  ccgan::AdaptationModel model = ccgan::init_adaptation_model(
      d, 2, ccgan::CurriculumMode::kModelFree, true, 7);
  ccgan::TrainConfig config;
  ccgan::ModelOptimizers opt =
      ccgan::init_optimizers(model, config.base_lr, config.lr_decay_every);
  const ccgan::LossWeights weights;
  const FixedBatches b = first_rows(task, config.batch_size);

  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ccgan::train_step(model, opt, b.source, b.labels, b.target, config, weights));
  }
}
BENCHMARK(BM_TrainStep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelFreeWeights(benchmark::State& state) {
  const int d = 16;
  ccgan::Rng rng(3);
  const ccgan::AdaptationModel model = ccgan::init_adaptation_model(
      d, 2, ccgan::CurriculumMode::kModelFree, true, 11);
  Matrix batch(static_cast<Eigen::Index>(state.range(0)), d);
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    for (Eigen::Index j = 0; j < batch.cols(); ++j) batch(i, j) = rng.gaussian();

  for (auto _ : state) {
    benchmark::DoNotOptimize(ccgan::model_free_weights(model.d_t, batch));
  }
}
BENCHMARK(BM_ModelFreeWeights)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
