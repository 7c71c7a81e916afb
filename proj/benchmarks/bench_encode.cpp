// Text-encoding and projection throughput: vocabulary construction, TF-IDF
// encoding, and the two-component PCA dump used by the audit tooling.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ccgan/pca.hpp"
#include "ccgan/rng.hpp"
#include "ccgan/synth_data.hpp"
#include "ccgan/text_encode.hpp"

namespace {

// Deterministic token-soup corpus: Zipf-ish draws over a closed vocabulary.
std::vector<ccgan::Document> synthetic_corpus(int docs, int words_per_doc) {
  ccgan::Rng rng(17);
  std::vector<std::string> words;
  for (int i = 0; i < 400; ++i) words.push_back("w" + std::to_string(i));
  std::vector<ccgan::Document> corpus;
  corpus.reserve(static_cast<std::size_t>(docs));
  for (int i = 0; i < docs; ++i) {
    std::string text;
    for (int j = 0; j < words_per_doc; ++j) {
      const double u = rng.canonical();
      const auto idx = static_cast<std::size_t>(u * u * 399.0);
      text += words[idx];
      text += ' ';
    }
    corpus.push_back({text, static_cast<int>(rng.below(2)), "d0"});
  }
  return corpus;
}

void BM_BuildVocab(benchmark::State& state) {
  const auto corpus = synthetic_corpus(static_cast<int>(state.range(0)), 40);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ccgan::build_vocab(corpus, 5000));
  }
}
BENCHMARK(BM_BuildVocab)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TfidfEncode(benchmark::State& state) {
  const auto corpus = synthetic_corpus(static_cast<int>(state.range(0)), 40);
  const ccgan::TfidfModel model = ccgan::fit_tfidf(ccgan::build_vocab(corpus, 5000));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ccgan::tfidf_encode(model, corpus));
  }
}
BENCHMARK(BM_TfidfEncode)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PcaProject(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ccgan::MultiSourceTask task =
      ccgan::make_multisource_task(3, {0.5, 1.0, 2.0}, d, 1.0, 500, 23, 2, 2.0);
  std::vector<ccgan::EncodedDataset> datasets = task.sources;
  datasets.push_back(task.target);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ccgan::pca_project(datasets, 2));
  }
}
BENCHMARK(BM_PcaProject)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
