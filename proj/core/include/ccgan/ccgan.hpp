#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccgan/autodiff.hpp"
#include "ccgan/checkpoint.hpp"
#include "ccgan/nn.hpp"

namespace ccgan {

enum class CurriculumMode : std::uint8_t { kNone = 0, kModelBased = 1, kModelFree = 2 };

std::string to_string(CurriculumMode mode);
CurriculumMode curriculum_mode_from_string(const std::string& name);

/// Loss-term weights of the joint objective (lambda_cgan, lambda_cyc,
/// lambda_uni, lambda_task).
struct LossWeights {
  double cgan = 0.1;
  double cyc = 1.0;
  double uni = 1.0;
  double task = 1.0;

  void validate() const;
};

struct TrainConfig {
  int batch_size = 64;
  long total_steps = 2000;
  int disc_steps_per_gen_step = 1;
  CurriculumMode mode = CurriculumMode::kModelFree;
  bool cycle_enabled = true;
  std::uint64_t seed = 0;
  long eval_every = 100;
  double base_lr = 1e-4;
  int lr_decay_every = 100;

  void validate() const;
};

/// All networks of the adaptation method. g_st/g_ts map d->d; discriminators
/// and selection networks map d->1 (sigmoid); the classifier maps d->C
/// (softmax). h_s/h_t are present iff mode is model_based.
struct AdaptationModel {
  int d = 0;
  int num_classes = 0;
  CurriculumMode mode = CurriculumMode::kModelFree;
  bool cycle_enabled = true;

  MlpParams g_st, g_ts, d_s, d_t, f_t;
  std::optional<MlpParams> h_s, h_t;
};

AdaptationModel init_adaptation_model(int d, int num_classes, CurriculumMode mode,
                                      bool cycle_enabled, std::uint64_t seed);

/// Model holding only the classifier, for the source-only baseline. The
/// classifier is seeded exactly like init_adaptation_model's.
AdaptationModel init_source_only_model(int d, int num_classes, std::uint64_t seed);

struct ModelOptimizers {
  AdamState g_st, g_ts, d_s, d_t, f_t;
  std::optional<AdamState> h_s, h_t;
};

ModelOptimizers init_optimizers(const AdaptationModel& model, double base_lr,
                                int lr_decay_every);

/// Tape-level loss builders. These are the differentiable path used by
/// training and by the gradient checks; the value-level overloads below wrap
/// them for plain evaluation.
namespace losses {

struct GanLossNodes {
  ad::Node disc;
  ad::Node gen;
};

/// Standard GAN pair: D is trained to output 1 on real rows and 0 on
/// generated rows; the generator minimizes the non-saturating -log D(fake).
/// The discriminator term sees the generated batch through stop_gradient.
GanLossNodes gan_losses(ad::Tape& tape, const StagedMlp& discriminator, ad::Node real,
                        ad::Node fake);

/// Weighted-fake-side variant; w is a (batch x 1) weight column summing to 1.
GanLossNodes curriculum_gan_losses(ad::Tape& tape, const StagedMlp& discriminator,
                                   ad::Node real, ad::Node fake, ad::Node w);

/// Batch weights from a selection network's pre-sigmoid logits, softmaxed over
/// the batch and detached.
ad::Node model_based_weights(ad::Tape& tape, const StagedMlp& selection, ad::Node batch);

/// Batch weights from discriminator outputs: softmax of log D equals D
/// normalized by its sum. Detached.
ad::Node model_free_weights(ad::Tape& tape, const StagedMlp& discriminator, ad::Node batch);

/// Mean per-row L1 reconstruction error through both generator compositions.
ad::Node cycle_loss(ad::Tape& tape, const StagedMlp& g_st, const StagedMlp& g_ts,
                    ad::Node source, ad::Node target);

/// KL divergence of the selection network's batch softmax from uniform.
ad::Node uniform_kl_loss(ad::Tape& tape, const StagedMlp& selection, ad::Node real);

/// Mean categorical cross-entropy of classifier(batch) against labels.
ad::Node classification_loss(ad::Tape& tape, const StagedMlp& classifier, ad::Node batch,
                             const std::vector<int>& labels, int num_classes);

/// Mean categorical cross-entropy of classifier(g_st(source)) against labels.
ad::Node task_loss(ad::Tape& tape, const StagedMlp& classifier, const StagedMlp& g_st,
                   ad::Node source, const std::vector<int>& labels, int num_classes);

}  // namespace losses

/// Value-level overloads (evaluation only; no gradients).
struct GanLosses {
  double disc = 0.0;
  double gen = 0.0;
};

GanLosses gan_losses(const MlpParams& discriminator, const Eigen::MatrixXd& real,
                     const Eigen::MatrixXd& fake);
GanLosses curriculum_gan_losses(const MlpParams& discriminator, const Eigen::MatrixXd& real,
                                const Eigen::MatrixXd& fake, const Eigen::VectorXd& w);
Eigen::VectorXd model_based_weights(const MlpParams& selection, const Eigen::MatrixXd& batch);
Eigen::VectorXd model_free_weights(const MlpParams& discriminator,
                                   const Eigen::MatrixXd& batch);
double cycle_loss(const MlpParams& g_st, const MlpParams& g_ts, const Eigen::MatrixXd& source,
                  const Eigen::MatrixXd& target);
double uniform_kl_loss(const MlpParams& selection, const Eigen::MatrixXd& real);
double task_loss(const MlpParams& classifier, const MlpParams& g_st,
                 const Eigen::MatrixXd& source, const std::vector<int>& labels,
                 int num_classes);

/// Per-term values of the joint objective. `total` is the min-player
/// objective: cgan terms are the generator-side losses; discriminator losses
/// are reported alongside but not folded into the total.
struct LossBreakdown {
  double cgan_st = 0.0;
  double cgan_ts = 0.0;
  double cyc = 0.0;
  double uni_t = 0.0;
  double uni_s = 0.0;
  double task = 0.0;
  double total = 0.0;
  double disc_t = 0.0;
  double disc_s = 0.0;
};

LossBreakdown total_objective(const AdaptationModel& model, const Eigen::MatrixXd& source,
                              const std::vector<int>& labels, const Eigen::MatrixXd& target,
                              const LossWeights& weights);

struct StepResult {
  LossBreakdown losses;
  /// Curriculum weights assigned to the generated forward batch during the
  /// generator phase (empty in mode none).
  Eigen::VectorXd forward_weights;
};

/// One alternating optimization step on a single (source, target) batch pair:
/// a discriminator phase (D_t and, with the cycle, D_s), then a generator
/// phase (generators, classifier, and selection networks). On a non-finite
/// loss the step throws NumericError naming the term and rolls every network
/// and optimizer back to its entry state.
StepResult train_step(AdaptationModel& model, ModelOptimizers& optimizers,
                      const Eigen::MatrixXd& source_batch, const std::vector<int>& labels,
                      const Eigen::MatrixXd& target_batch, const TrainConfig& config,
                      const LossWeights& weights);

struct Predictions {
  std::vector<int> classes;
  Eigen::MatrixXd probabilities;  // rows sum to 1
};

/// Applies the classifier directly to raw target representations; argmax ties
/// resolve toward the lower class index.
Predictions predict_target(const AdaptationModel& model, const Eigen::MatrixXd& target_rows);

/// Checkpoint packing. Only non-empty networks are stored; loading requires at
/// least the classifier.
Checkpoint model_to_checkpoint(const AdaptationModel& model,
                               const ModelOptimizers* optimizers);
AdaptationModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace ccgan
