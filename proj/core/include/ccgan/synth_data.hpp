#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ccgan/text_encode.hpp"

namespace ccgan {

/// Isotropic Gaussian class-conditional generator for one domain: rows are
/// drawn from Normal(class_mean + offset, sigma^2 I).
struct SyntheticDomainSpec {
  std::vector<Eigen::VectorXd> class_means;
  Eigen::VectorXd offset;  // domain shift applied to every class mean
  double sigma = 1.0;
  std::vector<int> samples_per_class;
  std::uint64_t seed = 0;

  void validate() const;
};

EncodedDataset generate_domain(const SyntheticDomainSpec& spec,
                               const std::string& domain_tag);

/// Multi-source task with an analytic oracle. Target labels are deliberately
/// kept out of the training-facing datasets: evaluation code reads
/// target_eval_labels, training code only ever sees `target` (unlabeled).
struct MultiSourceTask {
  std::vector<EncodedDataset> sources;  // labeled, tagged source0..source{k-1}
  EncodedDataset target;                // unlabeled rows
  std::vector<int> target_eval_labels;  // held out for evaluation only

  // Oracle descriptor: the target-domain generating distribution.
  std::vector<Eigen::VectorXd> class_means;
  double sigma = 1.0;
  std::vector<double> source_distances;  // ||offset_i|| per source

  int dim() const { return static_cast<int>(target.dim()); }
  int num_classes() const { return static_cast<int>(class_means.size()); }
};

/// Builds a k-source task: shared class means at pairwise distance
/// class_mean_distance, target offset 0, source i offset = a random unit
/// direction scaled by shift_magnitudes[i]. Deterministic per seed.
MultiSourceTask make_multisource_task(int k, const std::vector<double>& shift_magnitudes,
                                      int d, double sigma, int n_per_class,
                                      std::uint64_t seed, int num_classes = 2,
                                      double class_mean_distance = 2.0);

/// Accuracy of the Bayes-optimal rule on the target domain: closed form
/// Phi(delta/(2 sigma)) for two equiprobable classes, otherwise a 10^6-sample
/// Monte-Carlo estimate of the nearest-mean rule.
double bayes_accuracy(const MultiSourceTask& task);

/// Standard normal CDF.
double normal_cdf(double x);

/// Task directory round-trip: embedding files per domain plus a manifest
/// carrying the oracle descriptor. Target labels are stored separately from
/// the target rows so loading preserves the hygiene split.
void save_task(const std::string& dir, const MultiSourceTask& task);
MultiSourceTask load_task(const std::string& dir);

}  // namespace ccgan
