#pragma once

#include <string>

#include "ccgan/eval.hpp"

namespace ccgan {

/// Flat key=value run configuration ("#" starts a comment). Unknown keys are
/// rejected and every value is range-checked at parse time. dump() emits a
/// canonical form that parses back to an identical configuration.
struct RunConfig {
  std::string task_dir;
  std::string target_domain;
  std::string out_dir;
  ArmType arm = ArmType::kCcganModelFree;
  TrainConfig train;
  LossWeights weights;

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& origin);

  /// Applies one key=value assignment (shared by file parsing and flag
  /// overrides). `where` prefixes error messages.
  void set(const std::string& key, const std::string& value, const std::string& where);

  void validate() const;
  std::string dump() const;
  void save(const std::string& path) const;

  ExperimentConfig experiment() const;
};

}  // namespace ccgan
