#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccgan/ccgan.hpp"
#include "ccgan/synth_data.hpp"

namespace ccgan {

enum class ArmType : std::uint8_t {
  kSourceOnlyCombined = 0,
  kCycleganPlain = 1,
  kCcganModelBased = 2,
  kCcganModelFree = 3,
  kCcganNoCycle = 4,
};

std::string to_string(ArmType arm);
ArmType arm_from_string(const std::string& name);

/// Curriculum mode / cycle flag implied by an ablation arm.
CurriculumMode arm_mode(ArmType arm);
bool arm_cycle_enabled(ArmType arm);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Leave-one-domain-out rewiring: the named domain becomes the evaluation
/// target (its labels held out), every other domain becomes a source. Throws
/// ConfigError when no domain carries that name, DataError when a remaining
/// domain lacks labels. The analytic oracle is kept only when the named domain
/// is the task's original target.
MultiSourceTask select_target(const MultiSourceTask& task, const std::string& target_name);

struct MetricsRecord {
  long step = 0;
  LossBreakdown losses;
  double target_accuracy = 0.0;
  /// Mean curriculum weight of the step's generated batch, grouped by the
  /// source rows' domain tags (reporting only; training never reads tags).
  std::vector<std::pair<std::string, double>> source_mean_weights;
  double wall_seconds = 0.0;  // goes to the timing sidecar, never metrics.jsonl
};

struct ExperimentConfig {
  ArmType arm = ArmType::kCcganModelFree;
  TrainConfig train;
  LossWeights weights;
  std::string out_dir;  // when nonempty: metrics.jsonl, summary.json, model.ckpt, timing.txt
};

struct ExperimentResult {
  double final_accuracy = 0.0;
  LossBreakdown final_losses;
  std::vector<MetricsRecord> records;
  AdaptationModel model;
  ModelOptimizers optimizers;
};

/// Trains one ablation arm on the task and evaluates on the held-out target
/// labels every eval_every steps. Deterministic per (config, seed): metrics
/// and checkpoint bytes are identical across reruns. Wall-clock timings are
/// kept out of the deterministic outputs.
ExperimentResult run_experiment(const MultiSourceTask& task, const ExperimentConfig& config);

/// One line per record in JSON form (stable key order, shortest round-trip
/// decimals), excluding wall-clock fields.
void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRecord>& records);

/// Wall-clock sidecar for the same records.
void write_timing(const std::string& path, const std::vector<MetricsRecord>& records,
                  double total_wall_seconds);

void write_summary(const std::string& path, const ExperimentConfig& config,
                   const ExperimentResult& result);

struct WeightAuditRow {
  std::string domain;
  double mean_weight = 0.0;
  long samples = 0;
};

struct WeightAudit {
  std::vector<WeightAuditRow> rows;     // sorted by domain tag
  double max_batch_sum_error = 0.0;     // max |sum(w) - 1| over audited batches
};

/// Mean curriculum weight per true source domain over n_batches generated
/// batches. Requires a curriculum-mode model with its generator present.
WeightAudit weight_audit(const AdaptationModel& model, const MultiSourceTask& task,
                         int n_batches, int batch_size, std::uint64_t seed);

}  // namespace ccgan
