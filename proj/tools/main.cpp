// Command-line front end: encode, pretrain, synth, train, eval, audit, pca.
//
// Exit codes: 0 success, 2 configuration error, 3 data/format error,
// 4 numeric error, 1 anything unexpected.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccgan/ccgan.hpp"
#include "ccgan/checkpoint.hpp"
#include "ccgan/config.hpp"
#include "ccgan/errors.hpp"
#include "ccgan/eval.hpp"
#include "ccgan/format.hpp"
#include "ccgan/pca.hpp"
#include "ccgan/synth_data.hpp"
#include "ccgan/text_encode.hpp"

namespace {

using namespace ccgan;

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

double parse_double_flag(const std::string& text, const std::string& flag) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(flag + ": expected a decimal number, got \"" + text + "\"");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(parse_double_flag(item, flag));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// encode: corpus TSV -> TF-IDF embedding file
// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string corpus;
  std::string out;
  int max_features = 5000;
};

int run_encode(const EncodeArgs& args) {
  const std::vector<Document> docs = load_corpus(args.corpus);
  const Vocabulary vocab = build_vocab(docs, args.max_features);
  const TfidfModel model = fit_tfidf(vocab);
  const EncodedDataset data = tfidf_encode(model, docs);
  save_embeddings(args.out, data);
  std::cout << "encoded " << data.rows() << " documents into " << data.dim()
            << " features (" << vocab.size() << " vocabulary terms) -> " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain: embedding file -> autoencoder encoder checkpoint
// ---------------------------------------------------------------------------

struct PretrainArgs {
  std::string input;
  std::string out;
  std::string encoded_out;
  AutoencoderConfig config;
};

int run_pretrain(const PretrainArgs& args) {
  const EncodedDataset data = load_external_embeddings(args.input);
  const AutoencoderResult result = pretrain_autoencoder(data, args.config);
  Checkpoint ckpt;
  ckpt.entries.push_back({"encoder", result.encoder, std::nullopt});
  save_checkpoint(args.out, ckpt);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::cout << "epoch " << (e + 1) << " reconstruction "
              << format_double(result.epoch_losses[e]) << "\n";
  }
  std::cout << "encoder (" << data.dim() << " -> " << args.config.latent_dim
            << ") saved to " << args.out << "\n";
  if (!args.encoded_out.empty()) {
    const EncodedDataset encoded = encode_with(result.encoder, data);
    save_embeddings(args.encoded_out, encoded);
    std::cout << "encoded rows written to " << args.encoded_out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth: emit a synthetic multi-source task directory
// ---------------------------------------------------------------------------

struct SynthArgs {
  int k = 2;
  std::string shifts;
  std::uint64_t seed = 0;
  int d = 16;
  int classes = 2;
  double sigma = 1.0;
  double delta = 2.0;
  int n_per_class = 1000;
  std::string out;
};

int run_synth(const SynthArgs& args) {
  const std::vector<double> shifts = parse_double_list(args.shifts, "--shifts");
  const MultiSourceTask task = make_multisource_task(
      args.k, shifts, args.d, args.sigma, args.n_per_class, args.seed, args.classes, args.delta);
  save_task(args.out, task);
  std::cout << "task written to " << args.out << ": " << args.k << " sources, d=" << args.d
            << ", " << args.classes << " classes, " << args.n_per_class << " samples/class\n";
  std::cout << "analytic oracle accuracy " << format_double(bayes_accuracy(task)) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train: run one experiment arm
// ---------------------------------------------------------------------------

void print_loss_breakdown(const RunConfig& cfg, const LossBreakdown& final_losses) {
  struct Row {
    const char* term;
    double raw;
    double lambda;
  };
  const LossWeights& w = cfg.weights;
  const Row rows[] = {
      {"cgan_st", final_losses.cgan_st, w.cgan}, {"cgan_ts", final_losses.cgan_ts, w.cgan},
      {"cyc", final_losses.cyc, w.cyc},          {"uni_t", final_losses.uni_t, w.uni},
      {"uni_s", final_losses.uni_s, w.uni},      {"task", final_losses.task, w.task},
  };
  std::cout << pad("term", 10) << pad("raw", 26) << pad("lambda", 10) << "contribution\n";
  double sum = 0.0;
  for (const Row& row : rows) {
    const double contribution = row.lambda * row.raw;
    sum += contribution;
    std::cout << pad(row.term, 10) << pad(format_double(row.raw), 26)
              << pad(format_double(row.lambda), 10) << format_double(contribution) << "\n";
  }
  std::cout << pad("total", 10) << pad(format_double(final_losses.total), 26) << pad("", 10)
            << format_double(sum) << "\n";
}

struct TrainArgs {
  std::string config_path;
  // Flag values kept as raw text so overrides go through the same parser as
  // the config file, keeping the dump/reload round trip bit-exact.
  std::vector<std::pair<std::string, std::string>> overrides;  // key, value
};

int run_train(const TrainArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = RunConfig::load(args.config_path);
  for (const auto& [key, value] : args.overrides) {
    cfg.set(key, value, "flag");
  }
  if (cfg.task_dir.empty()) throw ConfigError("train: missing --task (no task directory given)");
  if (cfg.target_domain.empty()) {
    throw ConfigError("train: missing --target (no evaluation target domain given)");
  }
  if (cfg.out_dir.empty()) throw ConfigError("train: missing --out (no output directory given)");
  cfg.validate();

  const MultiSourceTask task = select_target(load_task(cfg.task_dir), cfg.target_domain);
  std::filesystem::create_directories(cfg.out_dir);
  cfg.save(cfg.out_dir + "/effective.cfg");

  const ExperimentResult result = run_experiment(task, cfg.experiment());

  std::cout << "arm " << to_string(cfg.arm) << ", " << cfg.train.total_steps << " steps, seed "
            << cfg.train.seed << "\n";
  print_loss_breakdown(cfg, result.final_losses);
  std::cout << "target_accuracy " << format_double(result.final_accuracy) << "\n";
  if (!task.class_means.empty()) {
    std::cout << "oracle_accuracy " << format_double(bayes_accuracy(task)) << "\n";
  }
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval: checkpoint -> target accuracy
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string task_dir;
  std::string target;
};

int run_eval(const EvalArgs& args) {
  const AdaptationModel model = model_from_checkpoint(load_checkpoint(args.checkpoint));
  const MultiSourceTask task = select_target(load_task(args.task_dir), args.target);
  if (task.target_eval_labels.empty()) {
    throw DataError("eval: target domain \"" + args.target + "\" has no held-out labels");
  }
  const Predictions preds = predict_target(model, task.target.z);
  const double acc = accuracy(preds.classes, task.target_eval_labels);
  std::cout << "target_accuracy " << format_double(acc) << " over "
            << task.target_eval_labels.size() << " samples\n";
  if (!task.class_means.empty()) {
    std::cout << "oracle_accuracy " << format_double(bayes_accuracy(task)) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// audit: per-source curriculum weight audit
// ---------------------------------------------------------------------------

struct AuditArgs {
  std::string checkpoint;
  std::string task_dir;
  std::string target;
  int batches = 16;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

int run_audit(const AuditArgs& args) {
  const AdaptationModel model = model_from_checkpoint(load_checkpoint(args.checkpoint));
  const MultiSourceTask task = select_target(load_task(args.task_dir), args.target);
  const WeightAudit audit = weight_audit(model, task, args.batches, args.batch_size, args.seed);
  std::cout << pad("domain", 16) << pad("mean_weight", 26) << "samples\n";
  for (const WeightAuditRow& row : audit.rows) {
    std::cout << pad(row.domain, 16) << pad(format_double(row.mean_weight), 26) << row.samples
              << "\n";
  }
  std::cout << "max |sum(w) - 1| over batches: " << format_double(audit.max_batch_sum_error)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pca: 2-D projection dump of the task's domains
// ---------------------------------------------------------------------------

struct PcaArgs {
  std::string task_dir;
  std::string out;
  std::string checkpoint;  // optional: also project the generated domain
};

int run_pca(const PcaArgs& args) {
  const MultiSourceTask task = load_task(args.task_dir);
  std::vector<EncodedDataset> datasets = task.sources;
  datasets.push_back(task.target);
  if (datasets.back().domain_tags.empty()) {
    datasets.back().domain_tags.assign(static_cast<std::size_t>(datasets.back().rows()),
                                       "target");
  }
  if (!args.checkpoint.empty()) {
    const AdaptationModel model = model_from_checkpoint(load_checkpoint(args.checkpoint));
    if (model.g_st.weights.empty()) {
      throw ConfigError("pca: checkpoint has no forward generator to project through");
    }
    EncodedDataset generated;
    for (const EncodedDataset& source : task.sources) {
      EncodedDataset mapped;
      mapped.z = forward_values(model.g_st, source.z);
      mapped.domain_tags.assign(static_cast<std::size_t>(mapped.rows()), "generated");
      if (generated.z.size() == 0) {
        generated = std::move(mapped);
      } else {
        const Eigen::Index old_rows = generated.z.rows();
        generated.z.conservativeResize(old_rows + mapped.z.rows(), Eigen::NoChange);
        generated.z.bottomRows(mapped.z.rows()) = mapped.z;
        generated.domain_tags.insert(generated.domain_tags.end(), mapped.domain_tags.begin(),
                                     mapped.domain_tags.end());
      }
    }
    datasets.push_back(std::move(generated));
  }
  const PcaResult pca = pca_project(datasets, 2);
  save_pca_dump(args.out, pca);
  std::cout << "projected " << pca.coordinates.rows() << " rows -> " << args.out << "\n";
  std::cout << "explained variance ratio: " << format_double(pca.explained_variance_ratio[0])
            << " " << format_double(pca.explained_variance_ratio[1]) << "\n";
  if (pca.degenerate_rank) std::cout << "warning: input rank below requested components\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum CycleGAN multi-source domain adaptation for text classification"};
  app.require_subcommand(1);

  EncodeArgs encode_args;
  CLI::App* encode = app.add_subcommand("encode", "Encode a corpus TSV into TF-IDF embeddings");
  encode->add_option("--corpus", encode_args.corpus, "Corpus TSV: label<TAB>domain<TAB>text")
      ->required();
  encode->add_option("--out", encode_args.out, "Output embedding file")->required();
  encode->add_option("--max-features", encode_args.max_features,
                     "Vocabulary cap over unigrams+bigrams")
      ->capture_default_str();

  PretrainArgs pretrain_args;
  CLI::App* pretrain =
      app.add_subcommand("pretrain", "Train a reconstruction autoencoder on embeddings");
  pretrain->add_option("--input", pretrain_args.input, "Input embedding file")->required();
  pretrain->add_option("--out", pretrain_args.out, "Encoder checkpoint path")->required();
  pretrain->add_option("--encoded-out", pretrain_args.encoded_out,
                       "Also write the encoded rows to this embedding file");
  pretrain->add_option("--latent", pretrain_args.config.latent_dim, "Latent dimension")
      ->capture_default_str();
  pretrain->add_option("--hidden", pretrain_args.config.hidden_dim, "Hidden dimension")
      ->capture_default_str();
  pretrain->add_option("--epochs", pretrain_args.config.epochs, "Training epochs")
      ->capture_default_str();
  pretrain->add_option("--batch-size", pretrain_args.config.batch_size, "Minibatch size")
      ->capture_default_str();
  pretrain->add_option("--lr", pretrain_args.config.base_lr, "Base learning rate")
      ->capture_default_str();
  pretrain->add_option("--lr-decay-every", pretrain_args.config.lr_decay_every,
                       "Halve the learning rate every this many steps")
      ->capture_default_str();
  pretrain->add_option("--seed", pretrain_args.config.seed, "Random seed")
      ->capture_default_str();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Emit a synthetic multi-source task directory");
  synth->add_option("--k", synth_args.k, "Number of source domains")->capture_default_str();
  synth->add_option("--shifts", synth_args.shifts,
                    "Comma-separated source shift magnitudes, one per source")
      ->required();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth->add_option("--d", synth_args.d, "Representation dimension")->capture_default_str();
  synth->add_option("--classes", synth_args.classes, "Number of classes")->capture_default_str();
  synth->add_option("--sigma", synth_args.sigma, "Isotropic class noise")->capture_default_str();
  synth->add_option("--delta", synth_args.delta, "Pairwise class-mean distance")
      ->capture_default_str();
  synth->add_option("--n", synth_args.n_per_class, "Samples per class per domain")
      ->capture_default_str();
  synth->add_option("--out", synth_args.out, "Task directory to write")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Run one adaptation experiment");
  train->add_option("--config", train_args.config_path,
                    "key=value configuration file; flags override file values");
  std::string f_task, f_target, f_out, f_arm, f_seed, f_batch, f_steps, f_disc, f_eval, f_lr,
      f_decay, f_lcgan, f_lcyc, f_luni, f_ltask;
  train->add_option("--task", f_task, "Task directory (synth output)");
  train->add_option("--target", f_target, "Domain name evaluated as the unlabeled target");
  train->add_option("--out", f_out, "Output directory for metrics/summary/checkpoint");
  train->add_option("--arm", f_arm,
                    "source_only_combined | cyclegan_plain | ccgan_model_based | "
                    "ccgan_model_free | ccgan_no_cycle");
  train->add_option("--seed", f_seed, "Random seed (default 0)");
  train->add_option("--batch-size", f_batch, "Minibatch size (default 64)");
  train->add_option("--total-steps", f_steps, "Generator steps (default 2000)");
  train->add_option("--disc-steps", f_disc, "Discriminator updates per generator step (default 1)");
  train->add_option("--eval-every", f_eval, "Evaluation period in steps (default 100)");
  train->add_option("--base-lr", f_lr, "Base learning rate (default 1e-4)");
  train->add_option("--lr-decay-every", f_decay, "Halve the learning rate every N steps (default 100)");
  train->add_option("--lambda-cgan", f_lcgan, "Adversarial loss weight (default 0.1)");
  train->add_option("--lambda-cyc", f_lcyc, "Cycle-consistency loss weight (default 1)");
  train->add_option("--lambda-uni", f_luni, "Uniformity regularizer weight (default 1)");
  train->add_option("--lambda-task", f_ltask, "Classification loss weight (default 1)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a task's target domain");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")->required();
  eval->add_option("--task", eval_args.task_dir, "Task directory")->required();
  eval->add_option("--target", eval_args.target, "Domain name evaluated as the target")
      ->required();

  AuditArgs audit_args;
  CLI::App* audit =
      app.add_subcommand("audit", "Report mean curriculum weight per source domain");
  audit->add_option("--checkpoint", audit_args.checkpoint, "Model checkpoint")->required();
  audit->add_option("--task", audit_args.task_dir, "Task directory")->required();
  audit->add_option("--target", audit_args.target, "Domain name treated as the target")
      ->required();
  audit->add_option("--batches", audit_args.batches, "Generated batches to audit")
      ->capture_default_str();
  audit->add_option("--batch-size", audit_args.batch_size, "Minibatch size")
      ->capture_default_str();
  audit->add_option("--seed", audit_args.seed, "Random seed")->capture_default_str();

  PcaArgs pca_args;
  CLI::App* pca = app.add_subcommand("pca", "Write a 2-D projection dump of the task domains");
  pca->add_option("--task", pca_args.task_dir, "Task directory")->required();
  pca->add_option("--out", pca_args.out, "Dump file (x y domain)")->required();
  pca->add_option("--checkpoint", pca_args.checkpoint,
                  "Also project source rows through the trained forward generator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag/usage problems are configuration errors
  }

  try {
    if (encode->parsed()) return run_encode(encode_args);
    if (pretrain->parsed()) return run_pretrain(pretrain_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (train->parsed()) {
      auto add = [&](const char* key, const std::string& value, const CLI::App* sub,
                     const char* flag) {
        if (sub->count(flag) > 0) train_args.overrides.emplace_back(key, value);
      };
      add("task", f_task, train, "--task");
      add("target", f_target, train, "--target");
      add("out_dir", f_out, train, "--out");
      add("arm", f_arm, train, "--arm");
      add("seed", f_seed, train, "--seed");
      add("batch_size", f_batch, train, "--batch-size");
      add("total_steps", f_steps, train, "--total-steps");
      add("disc_steps_per_gen_step", f_disc, train, "--disc-steps");
      add("eval_every", f_eval, train, "--eval-every");
      add("base_lr", f_lr, train, "--base-lr");
      add("lr_decay_every", f_decay, train, "--lr-decay-every");
      add("lambda_cgan", f_lcgan, train, "--lambda-cgan");
      add("lambda_cyc", f_lcyc, train, "--lambda-cyc");
      add("lambda_uni", f_luni, train, "--lambda-uni");
      add("lambda_task", f_ltask, train, "--lambda-task");
      return run_train(train_args);
    }
    if (eval->parsed()) return run_eval(eval_args);
    if (audit->parsed()) return run_audit(audit_args);
    if (pca->parsed()) return run_pca(pca_args);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
