#include "ccgan/ccgan.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {

std::string to_string(CurriculumMode mode) {
  switch (mode) {
    case CurriculumMode::kNone:
      return "none";
    case CurriculumMode::kModelBased:
      return "model_based";
    case CurriculumMode::kModelFree:
      return "model_free";
  }
  throw ContractError("unknown curriculum mode");
}

CurriculumMode curriculum_mode_from_string(const std::string& name) {
  if (name == "none") return CurriculumMode::kNone;
  if (name == "model_based") return CurriculumMode::kModelBased;
  if (name == "model_free") return CurriculumMode::kModelFree;
  throw ConfigError("unknown curriculum mode '" + name +
                    "' (expected none, model_based, or model_free)");
}

void LossWeights::validate() const {
  if (cgan < 0.0 || cyc < 0.0 || uni < 0.0 || task < 0.0) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (total_steps < 0) throw ConfigError("total_steps must be nonnegative");
  if (disc_steps_per_gen_step <= 0) {
    throw ConfigError("disc_steps_per_gen_step must be positive");
  }
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  if (base_lr <= 0.0) throw ConfigError("base_lr must be positive");
  if (lr_decay_every <= 0) throw ConfigError("lr_decay_every must be positive");
}

namespace {

MlpSpec generator_spec(int d) {
  return MlpSpec{{d, d, d, d, d}, Activation::kRelu, OutputActivation::kLinear};
}

MlpSpec discriminator_spec(int d) {
  return MlpSpec{{d, 256, 128, 64, 1}, Activation::kRelu, OutputActivation::kSigmoid};
}

MlpSpec classifier_spec(int d, int num_classes) {
  return MlpSpec{{d, 256, 128, 64, num_classes}, Activation::kRelu,
                 OutputActivation::kSoftmax};
}

bool has_params(const MlpParams& p) { return !p.weights.empty(); }

// Generators start as a near-identity map rather than a raw Glorot stack.
// Each weight matrix is the identity plus a small seeded Glorot perturbation;
// a constant positive bias on the first layer keeps every hidden relu in its
// linear region on the data scale, and the output bias cancels that lift
// exactly through the downstream weights. A Glorot-initialized d->d stack
// begins as a strong contraction that scrambles class geometry, and at the
// training lengths used here the adversarial phase rarely recovers from it;
// starting at the identity leaves only the small inter-domain offset to learn.
MlpParams init_generator_params(int d, std::uint64_t seed) {
  MlpParams p = init_params(generator_spec(d), seed);
  constexpr double kIdentityNoise = 0.01;
  constexpr double kReluLift = 10.0;
  for (auto& w : p.weights) {
    w = kIdentityNoise * w + Eigen::MatrixXd::Identity(d, d);
  }
  p.biases.front() = Eigen::RowVectorXd::Constant(d, kReluLift);
  Eigen::RowVectorXd lift_tail = p.biases.front();
  for (std::size_t l = 1; l < p.weights.size(); ++l) {
    lift_tail = lift_tail * p.weights[l];
  }
  p.biases.back() = -lift_tail;
  return p;
}

}  // namespace

AdaptationModel init_adaptation_model(int d, int num_classes, CurriculumMode mode,
                                      bool cycle_enabled, std::uint64_t seed) {
  if (d < 1) throw ConfigError("representation dimension must be positive");
  if (num_classes < 2) throw ConfigError("the classifier needs at least two classes");
  AdaptationModel model;
  model.d = d;
  model.num_classes = num_classes;
  model.mode = mode;
  model.cycle_enabled = cycle_enabled;
  model.g_st = init_generator_params(d, derive_seed(seed, 1));
  model.g_ts = init_generator_params(d, derive_seed(seed, 2));
  model.d_s = init_params(discriminator_spec(d), derive_seed(seed, 3));
  model.d_t = init_params(discriminator_spec(d), derive_seed(seed, 4));
  model.f_t = init_params(classifier_spec(d, num_classes), derive_seed(seed, 5));
  if (mode == CurriculumMode::kModelBased) {
    model.h_s = init_params(discriminator_spec(d), derive_seed(seed, 6));
    model.h_t = init_params(discriminator_spec(d), derive_seed(seed, 7));
  }
  return model;
}

AdaptationModel init_source_only_model(int d, int num_classes, std::uint64_t seed) {
  if (d < 1) throw ConfigError("representation dimension must be positive");
  if (num_classes < 2) throw ConfigError("the classifier needs at least two classes");
  AdaptationModel model;
  model.d = d;
  model.num_classes = num_classes;
  model.mode = CurriculumMode::kNone;
  model.cycle_enabled = false;
  model.f_t = init_params(classifier_spec(d, num_classes), derive_seed(seed, 5));
  return model;
}

ModelOptimizers init_optimizers(const AdaptationModel& model, double base_lr,
                                int lr_decay_every) {
  ModelOptimizers opt;
  opt.g_st = AdamState::like(model.g_st, base_lr, lr_decay_every);
  opt.g_ts = AdamState::like(model.g_ts, base_lr, lr_decay_every);
  opt.d_s = AdamState::like(model.d_s, base_lr, lr_decay_every);
  opt.d_t = AdamState::like(model.d_t, base_lr, lr_decay_every);
  opt.f_t = AdamState::like(model.f_t, base_lr, lr_decay_every);
  if (model.h_s) opt.h_s = AdamState::like(*model.h_s, base_lr, lr_decay_every);
  if (model.h_t) opt.h_t = AdamState::like(*model.h_t, base_lr, lr_decay_every);
  return opt;
}

namespace losses {

namespace {

// Rethrows numeric failures with the loss term's name attached, so a blown-up
// training step reports which part of the objective went non-finite.
template <typename Fn>
auto with_term(const char* term, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(std::string(term) + " loss went non-finite: " + e.what());
  }
}

Eigen::Index batch_rows(const ad::Tape& tape, ad::Node n) { return tape.values(n).rows(); }

// Softmax over a (B x 1) score column, returned as a detached (B x 1) weight
// column on the probability simplex.
ad::Node batch_softmax_detached(ad::Tape& tape, ad::Node scores) {
  ad::Node row = tape.row_softmax(tape.transpose(scores));
  return tape.stop_gradient(tape.transpose(row));
}

}  // namespace

GanLossNodes gan_losses(ad::Tape& tape, const StagedMlp& discriminator, ad::Node real,
                        ad::Node fake) {
  return with_term("gan", [&] {
    const Eigen::Index b_fake = batch_rows(tape, fake);
    if (batch_rows(tape, real) == 0 || b_fake == 0) {
      throw DimensionError("gan_losses needs nonempty batches");
    }
    ad::Node p_real = forward(tape, discriminator, real);
    ad::Node p_fake_gen = forward(tape, discriminator, fake);
    ad::Node p_fake_disc = forward(tape, discriminator, tape.stop_gradient(fake));
    ad::Node ones = tape.constant(Eigen::MatrixXd::Ones(b_fake, 1));
    ad::Node disc = tape.add(tape.neg(tape.mean(tape.log(p_real))),
                             tape.neg(tape.mean(tape.log(tape.sub(ones, p_fake_disc)))));
    ad::Node gen = tape.neg(tape.mean(tape.log(p_fake_gen)));
    return GanLossNodes{disc, gen};
  });
}

GanLossNodes curriculum_gan_losses(ad::Tape& tape, const StagedMlp& discriminator,
                                   ad::Node real, ad::Node fake, ad::Node w) {
  return with_term("curriculum gan", [&] {
    const Eigen::Index b_fake = batch_rows(tape, fake);
    if (batch_rows(tape, real) == 0 || b_fake == 0) {
      throw DimensionError("curriculum_gan_losses needs nonempty batches");
    }
    if (tape.values(w).rows() != b_fake || tape.values(w).cols() != 1) {
      throw ContractError("batch weights must be one column matching the generated batch");
    }
    ad::Node p_real = forward(tape, discriminator, real);
    ad::Node p_fake_gen = forward(tape, discriminator, fake);
    ad::Node p_fake_disc = forward(tape, discriminator, tape.stop_gradient(fake));
    ad::Node ones = tape.constant(Eigen::MatrixXd::Ones(b_fake, 1));
    ad::Node w_row = tape.transpose(w);
    ad::Node disc =
        tape.add(tape.neg(tape.mean(tape.log(p_real))),
                 tape.neg(tape.matmul(w_row, tape.log(tape.sub(ones, p_fake_disc)))));
    ad::Node gen = tape.neg(tape.matmul(w_row, tape.log(p_fake_gen)));
    return GanLossNodes{disc, gen};
  });
}

ad::Node model_based_weights(ad::Tape& tape, const StagedMlp& selection, ad::Node batch) {
  return with_term("model_based weights", [&] {
    if (batch_rows(tape, batch) == 0) {
      throw DimensionError("model_based_weights needs a nonempty batch");
    }
    ad::Node scores = forward_logits(tape, selection, batch);
    return batch_softmax_detached(tape, scores);
  });
}

ad::Node model_free_weights(ad::Tape& tape, const StagedMlp& discriminator, ad::Node batch) {
  return with_term("model_free weights", [&] {
    if (batch_rows(tape, batch) == 0) {
      throw DimensionError("model_free_weights needs a nonempty batch");
    }
    ad::Node p = forward(tape, discriminator, batch);
    return batch_softmax_detached(tape, tape.log(p));
  });
}

ad::Node cycle_loss(ad::Tape& tape, const StagedMlp& g_st, const StagedMlp& g_ts,
                    ad::Node source, ad::Node target) {
  return with_term("cycle", [&] {
    const Eigen::Index b_s = batch_rows(tape, source);
    const Eigen::Index b_t = batch_rows(tape, target);
    if (b_s == 0 || b_t == 0) throw DimensionError("cycle_loss needs nonempty batches");
    ad::Node source_cycle = forward(tape, g_ts, forward(tape, g_st, source));
    ad::Node target_cycle = forward(tape, g_st, forward(tape, g_ts, target));
    ad::Node term_s = tape.mul(tape.scalar_constant(1.0 / static_cast<double>(b_s)),
                               tape.l1_norm(tape.sub(source_cycle, source)));
    ad::Node term_t = tape.mul(tape.scalar_constant(1.0 / static_cast<double>(b_t)),
                               tape.l1_norm(tape.sub(target_cycle, target)));
    return tape.add(term_s, term_t);
  });
}

ad::Node uniform_kl_loss(ad::Tape& tape, const StagedMlp& selection, ad::Node real) {
  return with_term("uniform", [&] {
    const Eigen::Index b = batch_rows(tape, real);
    if (b == 0) throw DimensionError("uniform_kl_loss needs a nonempty batch");
    ad::Node scores = forward_logits(tape, selection, real);
    ad::Node p = tape.transpose(tape.row_softmax(tape.transpose(scores)));
    ad::Node entropy_term = tape.sum(tape.mul(p, tape.log(p)));
    return tape.add(entropy_term, tape.scalar_constant(std::log(static_cast<double>(b))));
  });
}

ad::Node classification_loss(ad::Tape& tape, const StagedMlp& classifier, ad::Node batch,
                             const std::vector<int>& labels, int num_classes) {
  return with_term("task", [&] {
    const Eigen::Index b = batch_rows(tape, batch);
    if (b == 0) throw DimensionError("classification_loss needs a nonempty batch");
    if (static_cast<Eigen::Index>(labels.size()) != b) {
      throw DataError("classification_loss needs one label per row");
    }
    Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(b, num_classes);
    for (Eigen::Index i = 0; i < b; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y < 0 || y >= num_classes) {
        throw DataError("label " + std::to_string(y) + " is outside [0, " +
                        std::to_string(num_classes) + ")");
      }
      one_hot(i, y) = 1.0;
    }
    ad::Node probs = forward(tape, classifier, batch);
    ad::Node log_likelihood = tape.sum(tape.mul(tape.constant(one_hot), tape.log(probs)));
    return tape.mul(tape.scalar_constant(-1.0 / static_cast<double>(b)), log_likelihood);
  });
}

ad::Node task_loss(ad::Tape& tape, const StagedMlp& classifier, const StagedMlp& g_st,
                   ad::Node source, const std::vector<int>& labels, int num_classes) {
  return classification_loss(tape, classifier, forward(tape, g_st, source), labels,
                             num_classes);
}

}  // namespace losses

namespace {

enum class Phase { kDisc, kGen, kEval };

struct StagedModel {
  StagedMlp g_st, g_ts, d_s, d_t, f_t;
  std::optional<StagedMlp> h_s, h_t;
};

StagedModel stage_model(ad::Tape& tape, const AdaptationModel& model, Phase phase) {
  const bool disc_trainable = phase == Phase::kDisc;
  const bool gen_trainable = phase == Phase::kGen;
  StagedModel staged;
  staged.g_st = stage(tape, model.g_st, gen_trainable);
  staged.f_t = stage(tape, model.f_t, gen_trainable);
  staged.d_t = stage(tape, model.d_t, disc_trainable);
  if (model.cycle_enabled) {
    staged.g_ts = stage(tape, model.g_ts, gen_trainable);
    staged.d_s = stage(tape, model.d_s, disc_trainable);
  }
  if (model.mode == CurriculumMode::kModelBased) {
    if (!model.h_s || !model.h_t) {
      throw ConfigError("model_based curriculum requires selection networks");
    }
    staged.h_t = stage(tape, *model.h_t, gen_trainable);
    if (model.cycle_enabled) staged.h_s = stage(tape, *model.h_s, gen_trainable);
  }
  return staged;
}

struct ObjectiveNodes {
  ad::Node total;
  ad::Node disc_total;
  ad::Node task;
  ad::Node gen_st, disc_t;
  std::optional<ad::Node> gen_ts, disc_s, cyc, uni_t, uni_s, w_t;
};

// Builds the full joint objective on one tape. `staged` decides which
// parameters are trainable; the graph itself is identical across phases.
ObjectiveNodes build_objective(ad::Tape& tape, const StagedModel& staged,
                               const AdaptationModel& model, ad::Node source,
                               const std::vector<int>& labels, ad::Node target,
                               const LossWeights& weights) {
  ObjectiveNodes nodes;

  ad::Node fake_t = forward(tape, staged.g_st, source);
  losses::GanLossNodes forward_gan{};
  switch (model.mode) {
    case CurriculumMode::kNone:
      forward_gan = losses::gan_losses(tape, staged.d_t, target, fake_t);
      break;
    case CurriculumMode::kModelFree:
      nodes.w_t = losses::model_free_weights(tape, staged.d_t, fake_t);
      forward_gan = losses::curriculum_gan_losses(tape, staged.d_t, target, fake_t, *nodes.w_t);
      break;
    case CurriculumMode::kModelBased:
      nodes.w_t = losses::model_based_weights(tape, *staged.h_t, fake_t);
      forward_gan = losses::curriculum_gan_losses(tape, staged.d_t, target, fake_t, *nodes.w_t);
      nodes.uni_t = losses::uniform_kl_loss(tape, *staged.h_t, target);
      break;
  }
  nodes.gen_st = forward_gan.gen;
  nodes.disc_t = forward_gan.disc;

  if (model.cycle_enabled) {
    ad::Node fake_s = forward(tape, staged.g_ts, target);
    losses::GanLossNodes reverse_gan{};
    switch (model.mode) {
      case CurriculumMode::kNone:
        reverse_gan = losses::gan_losses(tape, staged.d_s, source, fake_s);
        break;
      case CurriculumMode::kModelFree: {
        ad::Node w_s = losses::model_free_weights(tape, staged.d_s, fake_s);
        reverse_gan = losses::curriculum_gan_losses(tape, staged.d_s, source, fake_s, w_s);
        break;
      }
      case CurriculumMode::kModelBased: {
        ad::Node w_s = losses::model_based_weights(tape, *staged.h_s, fake_s);
        reverse_gan = losses::curriculum_gan_losses(tape, staged.d_s, source, fake_s, w_s);
        nodes.uni_s = losses::uniform_kl_loss(tape, *staged.h_s, source);
        break;
      }
    }
    nodes.gen_ts = reverse_gan.gen;
    nodes.disc_s = reverse_gan.disc;
    nodes.cyc = losses::cycle_loss(tape, staged.g_st, staged.g_ts, source, target);
  }

  nodes.task = losses::task_loss(tape, staged.f_t, staged.g_st, source, labels,
                                 model.num_classes);

  ad::Node gan_sum = nodes.gen_ts ? tape.add(nodes.gen_st, *nodes.gen_ts) : nodes.gen_st;
  ad::Node total = tape.add(tape.mul(tape.scalar_constant(weights.task), nodes.task),
                            tape.mul(tape.scalar_constant(weights.cgan), gan_sum));
  if (nodes.cyc) {
    total = tape.add(total, tape.mul(tape.scalar_constant(weights.cyc), *nodes.cyc));
  }
  if (nodes.uni_t) {
    ad::Node uni_sum = nodes.uni_s ? tape.add(*nodes.uni_t, *nodes.uni_s) : *nodes.uni_t;
    total = tape.add(total, tape.mul(tape.scalar_constant(weights.uni), uni_sum));
  }
  nodes.total = total;
  nodes.disc_total = nodes.disc_s ? tape.add(nodes.disc_t, *nodes.disc_s) : nodes.disc_t;
  return nodes;
}

LossBreakdown extract_breakdown(const ad::Tape& tape, const ObjectiveNodes& nodes) {
  LossBreakdown b;
  b.cgan_st = tape.scalar(nodes.gen_st);
  if (nodes.gen_ts) b.cgan_ts = tape.scalar(*nodes.gen_ts);
  if (nodes.cyc) b.cyc = tape.scalar(*nodes.cyc);
  if (nodes.uni_t) b.uni_t = tape.scalar(*nodes.uni_t);
  if (nodes.uni_s) b.uni_s = tape.scalar(*nodes.uni_s);
  b.task = tape.scalar(nodes.task);
  b.total = tape.scalar(nodes.total);
  b.disc_t = tape.scalar(nodes.disc_t);
  if (nodes.disc_s) b.disc_s = tape.scalar(*nodes.disc_s);
  return b;
}

void check_batches(const AdaptationModel& model, const Eigen::MatrixXd& source,
                   const Eigen::MatrixXd& target) {
  if (source.rows() == 0 || target.rows() == 0) {
    throw DimensionError("training batches must be nonempty");
  }
  if (source.cols() != model.d || target.cols() != model.d) {
    throw DimensionError("batch dimension does not match the model's representation dim");
  }
}

}  // namespace

LossBreakdown total_objective(const AdaptationModel& model, const Eigen::MatrixXd& source,
                              const std::vector<int>& labels, const Eigen::MatrixXd& target,
                              const LossWeights& weights) {
  weights.validate();
  check_batches(model, source, target);
  ad::Tape tape;
  StagedModel staged = stage_model(tape, model, Phase::kEval);
  ObjectiveNodes nodes = build_objective(tape, staged, model, tape.constant(source), labels,
                                         tape.constant(target), weights);
  return extract_breakdown(tape, nodes);
}

StepResult train_step(AdaptationModel& model, ModelOptimizers& optimizers,
                      const Eigen::MatrixXd& source_batch, const std::vector<int>& labels,
                      const Eigen::MatrixXd& target_batch, const TrainConfig& config,
                      const LossWeights& weights) {
  config.validate();
  weights.validate();
  check_batches(model, source_batch, target_batch);
  if (static_cast<Eigen::Index>(labels.size()) != source_batch.rows()) {
    throw DataError("every source row in a training batch needs a label");
  }

  // Entry snapshot so a non-finite loss leaves the model exactly as it was.
  const AdaptationModel model_backup = model;
  const ModelOptimizers optimizer_backup = optimizers;
  try {
    for (int repeat = 0; repeat < config.disc_steps_per_gen_step; ++repeat) {
      ad::Tape tape;
      StagedModel staged = stage_model(tape, model, Phase::kDisc);
      ObjectiveNodes nodes = build_objective(tape, staged, model, tape.constant(source_batch),
                                             labels, tape.constant(target_batch), weights);
      tape.backward(nodes.disc_total);
      adam_step(model.d_t, MlpGrads::from_tape(tape, staged.d_t), optimizers.d_t);
      if (model.cycle_enabled) {
        adam_step(model.d_s, MlpGrads::from_tape(tape, staged.d_s), optimizers.d_s);
      }
    }

    ad::Tape tape;
    StagedModel staged = stage_model(tape, model, Phase::kGen);
    ObjectiveNodes nodes = build_objective(tape, staged, model, tape.constant(source_batch),
                                           labels, tape.constant(target_batch), weights);
    tape.backward(nodes.total);
    adam_step(model.g_st, MlpGrads::from_tape(tape, staged.g_st), optimizers.g_st);
    adam_step(model.f_t, MlpGrads::from_tape(tape, staged.f_t), optimizers.f_t);
    if (model.cycle_enabled) {
      adam_step(model.g_ts, MlpGrads::from_tape(tape, staged.g_ts), optimizers.g_ts);
    }
    if (model.mode == CurriculumMode::kModelBased) {
      adam_step(*model.h_t, MlpGrads::from_tape(tape, *staged.h_t), *optimizers.h_t);
      if (model.cycle_enabled) {
        adam_step(*model.h_s, MlpGrads::from_tape(tape, *staged.h_s), *optimizers.h_s);
      }
    }

    StepResult result;
    result.losses = extract_breakdown(tape, nodes);
    if (nodes.w_t) result.forward_weights = tape.values(*nodes.w_t).col(0);
    return result;
  } catch (...) {
    model = model_backup;
    optimizers = optimizer_backup;
    throw;
  }
}

Predictions predict_target(const AdaptationModel& model, const Eigen::MatrixXd& target_rows) {
  if (!has_params(model.f_t)) throw ContractError("predict_target needs a trained classifier");
  if (target_rows.cols() != model.f_t.spec.input_dim()) {
    throw DimensionError("target rows do not match the classifier's input dim");
  }
  Predictions out;
  out.probabilities = forward_values(model.f_t, target_rows);
  out.classes.reserve(static_cast<std::size_t>(target_rows.rows()));
  for (Eigen::Index i = 0; i < out.probabilities.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < out.probabilities.cols(); ++j) {
      if (out.probabilities(i, j) > out.probabilities(i, best)) best = static_cast<int>(j);
    }
    out.classes.push_back(best);
  }
  return out;
}

GanLosses gan_losses(const MlpParams& discriminator, const Eigen::MatrixXd& real,
                     const Eigen::MatrixXd& fake) {
  ad::Tape tape;
  StagedMlp d = stage(tape, discriminator, false);
  losses::GanLossNodes nodes =
      losses::gan_losses(tape, d, tape.constant(real), tape.constant(fake));
  return GanLosses{tape.scalar(nodes.disc), tape.scalar(nodes.gen)};
}

GanLosses curriculum_gan_losses(const MlpParams& discriminator, const Eigen::MatrixXd& real,
                                const Eigen::MatrixXd& fake, const Eigen::VectorXd& w) {
  ad::Tape tape;
  StagedMlp d = stage(tape, discriminator, false);
  losses::GanLossNodes nodes = losses::curriculum_gan_losses(
      tape, d, tape.constant(real), tape.constant(fake), tape.constant(w));
  return GanLosses{tape.scalar(nodes.disc), tape.scalar(nodes.gen)};
}

Eigen::VectorXd model_based_weights(const MlpParams& selection, const Eigen::MatrixXd& batch) {
  ad::Tape tape;
  StagedMlp h = stage(tape, selection, false);
  ad::Node w = losses::model_based_weights(tape, h, tape.constant(batch));
  return tape.values(w).col(0);
}

Eigen::VectorXd model_free_weights(const MlpParams& discriminator,
                                   const Eigen::MatrixXd& batch) {
  ad::Tape tape;
  StagedMlp d = stage(tape, discriminator, false);
  ad::Node w = losses::model_free_weights(tape, d, tape.constant(batch));
  return tape.values(w).col(0);
}

double cycle_loss(const MlpParams& g_st, const MlpParams& g_ts, const Eigen::MatrixXd& source,
                  const Eigen::MatrixXd& target) {
  ad::Tape tape;
  StagedMlp st = stage(tape, g_st, false);
  StagedMlp ts = stage(tape, g_ts, false);
  return tape.scalar(
      losses::cycle_loss(tape, st, ts, tape.constant(source), tape.constant(target)));
}

double uniform_kl_loss(const MlpParams& selection, const Eigen::MatrixXd& real) {
  ad::Tape tape;
  StagedMlp h = stage(tape, selection, false);
  return tape.scalar(losses::uniform_kl_loss(tape, h, tape.constant(real)));
}

double task_loss(const MlpParams& classifier, const MlpParams& g_st,
                 const Eigen::MatrixXd& source, const std::vector<int>& labels,
                 int num_classes) {
  ad::Tape tape;
  StagedMlp f = stage(tape, classifier, false);
  StagedMlp g = stage(tape, g_st, false);
  return tape.scalar(
      losses::task_loss(tape, f, g, tape.constant(source), labels, num_classes));
}

Checkpoint model_to_checkpoint(const AdaptationModel& model,
                               const ModelOptimizers* optimizers) {
  Checkpoint ckpt;
  auto push = [&](const char* name, const MlpParams& params, const AdamState* adam) {
    if (!has_params(params)) return;
    CheckpointEntry entry;
    entry.name = name;
    entry.params = params;
    if (adam != nullptr) entry.adam = *adam;
    ckpt.entries.push_back(std::move(entry));
  };
  push("g_st", model.g_st, optimizers ? &optimizers->g_st : nullptr);
  push("g_ts", model.g_ts, optimizers ? &optimizers->g_ts : nullptr);
  push("d_s", model.d_s, optimizers ? &optimizers->d_s : nullptr);
  push("d_t", model.d_t, optimizers ? &optimizers->d_t : nullptr);
  push("f_t", model.f_t, optimizers ? &optimizers->f_t : nullptr);
  if (model.h_s) {
    push("h_s", *model.h_s,
         optimizers && optimizers->h_s ? &*optimizers->h_s : nullptr);
  }
  if (model.h_t) {
    push("h_t", *model.h_t,
         optimizers && optimizers->h_t ? &*optimizers->h_t : nullptr);
  }
  return ckpt;
}

AdaptationModel model_from_checkpoint(const Checkpoint& ckpt) {
  AdaptationModel model;
  const CheckpointEntry& f_t = ckpt.require("f_t");
  model.f_t = f_t.params;
  model.d = f_t.params.spec.input_dim();
  model.num_classes = f_t.params.spec.output_dim();
  if (const auto* e = ckpt.find("g_st")) model.g_st = e->params;
  if (const auto* e = ckpt.find("g_ts")) model.g_ts = e->params;
  if (const auto* e = ckpt.find("d_s")) model.d_s = e->params;
  if (const auto* e = ckpt.find("d_t")) model.d_t = e->params;
  if (const auto* e = ckpt.find("h_s")) model.h_s = e->params;
  if (const auto* e = ckpt.find("h_t")) model.h_t = e->params;
  model.cycle_enabled = has_params(model.g_ts);
  model.mode = model.h_t ? CurriculumMode::kModelBased : CurriculumMode::kModelFree;
  return model;
}

}  // namespace ccgan
