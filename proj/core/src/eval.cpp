#include "ccgan/eval.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {

std::string to_string(ArmType arm) {
  switch (arm) {
    case ArmType::kSourceOnlyCombined:
      return "source_only_combined";
    case ArmType::kCycleganPlain:
      return "cyclegan_plain";
    case ArmType::kCcganModelBased:
      return "ccgan_model_based";
    case ArmType::kCcganModelFree:
      return "ccgan_model_free";
    case ArmType::kCcganNoCycle:
      return "ccgan_no_cycle";
  }
  throw ContractError("unknown ablation arm");
}

ArmType arm_from_string(const std::string& name) {
  if (name == "source_only_combined") return ArmType::kSourceOnlyCombined;
  if (name == "cyclegan_plain") return ArmType::kCycleganPlain;
  if (name == "ccgan_model_based") return ArmType::kCcganModelBased;
  if (name == "ccgan_model_free") return ArmType::kCcganModelFree;
  if (name == "ccgan_no_cycle") return ArmType::kCcganNoCycle;
  throw ConfigError("unknown ablation arm '" + name + "'");
}

CurriculumMode arm_mode(ArmType arm) {
  switch (arm) {
    case ArmType::kSourceOnlyCombined:
    case ArmType::kCycleganPlain:
      return CurriculumMode::kNone;
    case ArmType::kCcganModelBased:
      return CurriculumMode::kModelBased;
    case ArmType::kCcganModelFree:
    case ArmType::kCcganNoCycle:
      return CurriculumMode::kModelFree;
  }
  throw ContractError("unknown ablation arm");
}

bool arm_cycle_enabled(ArmType arm) { return arm != ArmType::kCcganNoCycle && arm != ArmType::kSourceOnlyCombined; }

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw DataError("accuracy needs at least one prediction");
  if (predictions.size() != labels.size()) {
    throw DimensionError("accuracy needs one label per prediction");
  }
  long correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

std::string domain_name(const EncodedDataset& ds, const std::string& fallback) {
  if (!ds.domain_tags.empty() && !ds.domain_tags.front().empty()) {
    return ds.domain_tags.front();
  }
  return fallback;
}

}  // namespace

MultiSourceTask select_target(const MultiSourceTask& task, const std::string& target_name) {
  // Flatten into a uniform domain list; the original target gets its held-out
  // labels back temporarily so it can serve as a source when not selected.
  struct DomainView {
    const EncodedDataset* data;
    std::vector<int> labels;
    std::string name;
  };
  std::vector<DomainView> domains;
  for (std::size_t i = 0; i < task.sources.size(); ++i) {
    domains.push_back(DomainView{&task.sources[i], task.sources[i].labels,
                                 domain_name(task.sources[i], "source" + std::to_string(i))});
  }
  domains.push_back(DomainView{&task.target, task.target_eval_labels,
                               domain_name(task.target, "target")});

  std::size_t chosen = domains.size();
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (domains[i].name == target_name) {
      chosen = i;
      break;
    }
  }
  if (chosen == domains.size()) {
    std::string names;
    for (const auto& d : domains) names += (names.empty() ? "" : ", ") + d.name;
    throw ConfigError("target domain '" + target_name + "' absent from task (have: " +
                      names + ")");
  }

  MultiSourceTask out;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (i == chosen) continue;
    if (domains[i].labels.empty()) {
      throw DataError("domain '" + domains[i].name + "' is unlabeled and cannot serve as a source");
    }
    EncodedDataset src = *domains[i].data;
    src.labels = domains[i].labels;
    out.sources.push_back(std::move(src));
  }
  out.target = *domains[chosen].data;
  out.target.labels.clear();
  out.target_eval_labels = domains[chosen].labels;

  // The analytic oracle describes the original target's distribution only.
  const bool original_target = chosen == domains.size() - 1;
  if (original_target) {
    out.class_means = task.class_means;
    out.sigma = task.sigma;
    out.source_distances = task.source_distances;
  }
  return out;
}

namespace {

// Replacement-free index batches: reshuffles each epoch and drops the partial
// tail, so every served batch has exactly batch_size rows.
class BatchStream {
 public:
  BatchStream(Eigen::Index n, int batch_size, std::uint64_t seed)
      : batch_size_(batch_size), rng_(seed) {
    if (n < batch_size) {
      throw ConfigError("dataset has fewer rows than one batch (" + std::to_string(n) +
                        " < " + std::to_string(batch_size) + ")");
    }
    order_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order_[static_cast<std::size_t>(i)] = i;
    reshuffle();
  }

  const std::vector<Eigen::Index>& next() {
    if (pos_ + static_cast<std::size_t>(batch_size_) > order_.size()) reshuffle();
    batch_.assign(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  order_.begin() + static_cast<std::ptrdiff_t>(pos_) + batch_size_);
    pos_ += static_cast<std::size_t>(batch_size_);
    return batch_;
  }

 private:
  void reshuffle() {
    rng_.shuffle(order_);
    pos_ = 0;
  }

  std::vector<Eigen::Index> order_;
  std::vector<Eigen::Index> batch_;
  std::size_t pos_ = 0;
  int batch_size_;
  Rng rng_;
};

struct PooledSource {
  Eigen::MatrixXd z;
  std::vector<int> labels;
  std::vector<std::string> tags;
};

PooledSource pool_sources(const MultiSourceTask& task) {
  if (task.sources.empty()) throw DataError("the task has no source domains");
  Eigen::Index total = 0;
  const Eigen::Index d = task.sources.front().dim();
  for (const auto& src : task.sources) {
    src.validate();
    if (src.dim() != d) throw DimensionError("source domains must share one dimension");
    if (!src.has_labels()) throw DataError("source domains must be labeled");
    total += src.rows();
  }
  PooledSource pooled;
  pooled.z.resize(total, d);
  pooled.labels.reserve(static_cast<std::size_t>(total));
  pooled.tags.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < task.sources.size(); ++s) {
    const auto& src = task.sources[s];
    pooled.z.middleRows(row, src.rows()) = src.z;
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
      const int y = src.labels[static_cast<std::size_t>(i)];
      if (y < 0) throw DataError("source rows must all carry labels");
      pooled.labels.push_back(y);
      pooled.tags.push_back(src.domain_tags.empty() ? "source" + std::to_string(s)
                                                    : src.domain_tags[static_cast<std::size_t>(i)]);
    }
    row += src.rows();
  }
  return pooled;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

std::vector<std::pair<std::string, double>> group_weights_by_tag(
    const Eigen::VectorXd& weights, const std::vector<std::string>& tags,
    const std::vector<Eigen::Index>& idx) {
  std::map<std::string, std::pair<double, long>> sums;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& [sum, count] = sums[tags[static_cast<std::size_t>(idx[i])]];
    sum += weights(static_cast<Eigen::Index>(i));
    ++count;
  }
  std::vector<std::pair<std::string, double>> out;
  out.reserve(sums.size());
  for (const auto& [tag, sum_count] : sums) {
    out.emplace_back(tag, sum_count.first / static_cast<double>(sum_count.second));
  }
  return out;
}

int max_label(const std::vector<int>& labels) {
  int m = -1;
  for (int y : labels) m = std::max(m, y);
  return m;
}

double evaluate_target(const AdaptationModel& model, const MultiSourceTask& task) {
  const Predictions pred = predict_target(model, task.target.z);
  return accuracy(pred.classes, task.target_eval_labels);
}

ExperimentResult run_source_only(const MultiSourceTask& task, const ExperimentConfig& config,
                                 const PooledSource& pooled) {
  const TrainConfig& tc = config.train;
  const int num_classes = std::max(2, max_label(pooled.labels) + 1);
  ExperimentResult result;
  result.model = init_source_only_model(task.dim(), num_classes, derive_seed(tc.seed, 0x30DE1));
  result.optimizers = init_optimizers(result.model, tc.base_lr, tc.lr_decay_every);

  BatchStream stream(pooled.z.rows(), tc.batch_size, derive_seed(tc.seed, 0x51C));
  const auto t0 = std::chrono::steady_clock::now();
  for (long step = 1; step <= tc.total_steps; ++step) {
    const auto& idx = stream.next();
    const Eigen::MatrixXd batch = gather_rows(pooled.z, idx);
    std::vector<int> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      labels[i] = pooled.labels[static_cast<std::size_t>(idx[i])];
    }

    ad::Tape tape;
    StagedMlp f_t = stage(tape, result.model.f_t, /*trainable=*/true);
    ad::Node loss = losses::classification_loss(tape, f_t, tape.constant(batch), labels,
                                                num_classes);
    tape.backward(loss);
    adam_step(result.model.f_t, MlpGrads::from_tape(tape, f_t), result.optimizers.f_t);

    if (step % tc.eval_every == 0 || step == tc.total_steps) {
      MetricsRecord record;
      record.step = step;
      record.losses.task = tape.scalar(loss);
      record.losses.total = config.weights.task * record.losses.task;
      record.target_accuracy = evaluate_target(result.model, task);
      record.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.records.push_back(std::move(record));
    }
  }
  if (!result.records.empty()) {
    result.final_accuracy = result.records.back().target_accuracy;
    result.final_losses = result.records.back().losses;
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const MultiSourceTask& task, const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.train.mode = arm_mode(cfg.arm);
  cfg.train.cycle_enabled = arm_cycle_enabled(cfg.arm);
  cfg.train.validate();
  cfg.weights.validate();

  const PooledSource pooled = pool_sources(task);
  task.target.validate();
  if (task.target.rows() == 0) throw DataError("the task has no target rows");
  if (static_cast<Eigen::Index>(task.target_eval_labels.size()) != task.target.rows()) {
    throw DataError("the task needs held-out target labels for evaluation");
  }

  ExperimentResult result;
  if (cfg.arm == ArmType::kSourceOnlyCombined) {
    result = run_source_only(task, cfg, pooled);
  } else {
    const TrainConfig& tc = cfg.train;
    const int num_classes = std::max(2, max_label(pooled.labels) + 1);
    result.model = init_adaptation_model(task.dim(), num_classes, tc.mode, tc.cycle_enabled,
                                         derive_seed(tc.seed, 0x30DE1));
    result.optimizers = init_optimizers(result.model, tc.base_lr, tc.lr_decay_every);

    BatchStream source_stream(pooled.z.rows(), tc.batch_size, derive_seed(tc.seed, 0x51C));
    BatchStream target_stream(task.target.rows(), tc.batch_size, derive_seed(tc.seed, 0x717));

    const auto t0 = std::chrono::steady_clock::now();
    for (long step = 1; step <= tc.total_steps; ++step) {
      const auto& src_idx = source_stream.next();
      const auto& tgt_idx = target_stream.next();
      const Eigen::MatrixXd src = gather_rows(pooled.z, src_idx);
      const Eigen::MatrixXd tgt = gather_rows(task.target.z, tgt_idx);
      std::vector<int> labels(src_idx.size());
      for (std::size_t i = 0; i < src_idx.size(); ++i) {
        labels[i] = pooled.labels[static_cast<std::size_t>(src_idx[i])];
      }

      const StepResult step_result =
          train_step(result.model, result.optimizers, src, labels, tgt, tc, cfg.weights);

      if (step % tc.eval_every == 0 || step == tc.total_steps) {
        MetricsRecord record;
        record.step = step;
        record.losses = step_result.losses;
        record.target_accuracy = evaluate_target(result.model, task);
        if (step_result.forward_weights.size() > 0) {
          record.source_mean_weights =
              group_weights_by_tag(step_result.forward_weights, pooled.tags, src_idx);
        }
        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(std::move(record));
      }
    }
    if (!result.records.empty()) {
      result.final_accuracy = result.records.back().target_accuracy;
      result.final_losses = result.records.back().losses;
    }
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    write_metrics_jsonl((fs::path(cfg.out_dir) / "metrics.jsonl").string(), result.records);
    write_summary((fs::path(cfg.out_dir) / "summary.json").string(), cfg, result);
    const double total_wall =
        result.records.empty() ? 0.0 : result.records.back().wall_seconds;
    write_timing((fs::path(cfg.out_dir) / "timing.txt").string(), result.records, total_wall);
    save_checkpoint((fs::path(cfg.out_dir) / "model.ckpt").string(),
                    model_to_checkpoint(result.model, &result.optimizers));
  }
  return result;
}

namespace {

nlohmann::json losses_to_json(const LossBreakdown& losses) {
  // nlohmann orders object keys alphabetically, keeping output bytes stable.
  nlohmann::json j;
  j["cgan_st"] = losses.cgan_st;
  j["cgan_ts"] = losses.cgan_ts;
  j["cyc"] = losses.cyc;
  j["disc_s"] = losses.disc_s;
  j["disc_t"] = losses.disc_t;
  j["task"] = losses.task;
  j["total"] = losses.total;
  j["uni_s"] = losses.uni_s;
  j["uni_t"] = losses.uni_t;
  return j;
}

}  // namespace

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open metrics file for writing: " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["step"] = r.step;
    j["losses"] = losses_to_json(r.losses);
    j["target_accuracy"] = r.target_accuracy;
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [tag, mean] : r.source_mean_weights) weights[tag] = mean;
    j["source_mean_weights"] = std::move(weights);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing metrics file: " + path);
}

void write_timing(const std::string& path, const std::vector<MetricsRecord>& records,
                  double total_wall_seconds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open timing file for writing: " + path);
  out << "# wall-clock seconds since training start, per evaluated step\n";
  for (const auto& r : records) {
    out << r.step << '\t' << r.wall_seconds << '\n';
  }
  out << "total\t" << total_wall_seconds << '\n';
  if (!out) throw DataError("failed writing timing file: " + path);
}

void write_summary(const std::string& path, const ExperimentConfig& config,
                   const ExperimentResult& result) {
  nlohmann::json j;
  j["arm"] = to_string(config.arm);
  j["seed"] = config.train.seed;
  j["total_steps"] = config.train.total_steps;
  j["batch_size"] = config.train.batch_size;
  j["final_accuracy"] = result.final_accuracy;
  j["final_losses"] = losses_to_json(result.final_losses);
  j["lambda"] = {{"cgan", config.weights.cgan},
                 {"cyc", config.weights.cyc},
                 {"task", config.weights.task},
                 {"uni", config.weights.uni}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open summary file for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing summary file: " + path);
}

WeightAudit weight_audit(const AdaptationModel& model, const MultiSourceTask& task,
                         int n_batches, int batch_size, std::uint64_t seed) {
  if (model.mode == CurriculumMode::kNone) {
    throw ContractError("weight_audit needs a curriculum mode (model_based or model_free)");
  }
  if (model.g_st.weights.empty()) {
    throw ContractError("weight_audit needs the source-to-target generator");
  }
  if (n_batches <= 0) throw ConfigError("weight_audit needs a positive batch count");

  const PooledSource pooled = pool_sources(task);
  BatchStream stream(pooled.z.rows(), batch_size, derive_seed(seed, 0xA0D17));

  std::map<std::string, std::pair<double, long>> sums;
  double max_sum_error = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    const auto& idx = stream.next();
    const Eigen::MatrixXd batch = gather_rows(pooled.z, idx);
    const Eigen::MatrixXd generated = forward_values(model.g_st, batch);
    Eigen::VectorXd w;
    if (model.mode == CurriculumMode::kModelFree) {
      w = model_free_weights(model.d_t, generated);
    } else {
      if (!model.h_t) throw ContractError("model_based audit needs the selection network");
      w = model_based_weights(*model.h_t, generated);
    }
    max_sum_error = std::max(max_sum_error, std::abs(w.sum() - 1.0));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto& [sum, count] = sums[pooled.tags[static_cast<std::size_t>(idx[i])]];
      sum += w(static_cast<Eigen::Index>(i));
      ++count;
    }
  }

  WeightAudit audit;
  audit.max_batch_sum_error = max_sum_error;
  for (const auto& [tag, sum_count] : sums) {
    audit.rows.push_back(WeightAuditRow{tag, sum_count.first / static_cast<double>(sum_count.second),
                                        sum_count.second});
  }
  return audit;
}

}  // namespace ccgan
