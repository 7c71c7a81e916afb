#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccgan/nn.hpp"

namespace ccgan {

/// One named network inside a checkpoint, optionally with its optimizer state.
struct CheckpointEntry {
  std::string name;
  MlpParams params;
  std::optional<AdamState> adam;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
  const CheckpointEntry& require(const std::string& name) const;
};

/// Self-describing binary container: magic "CCGAN1", then per network its
/// name, layer spec, and row-major little-endian f64 payloads. Writing is
/// byte-deterministic for identical inputs.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ccgan
