#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stt/model.hpp"

namespace stt {

// Versioned binary container, little-endian throughout:
//   magic "STTMODEL", u32 version, u32 config-record length, config record
//   (UTF-8 key=value lines), u32 tensor count, then per tensor: u32 name
//   length, name bytes, u32 rank, u32 dims[rank], f32 values (raw bits).
// Trainer state rides along as extra tensors named "adam.m.*", "adam.v.*" and
// "trainer.step"; loaders that only need the model skip them.
struct CheckpointTensor {
  std::vector<int> shape;
  std::vector<float> values;
};

struct Checkpoint {
  ModelConfig config;
  std::map<std::string, CheckpointTensor> tensors;
};

void saveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint loadCheckpoint(const std::string& path);

// Packs model parameters (plus optional extra tensors) into a checkpoint.
Checkpoint makeCheckpoint(const ModelConfig& cfg, const ModelState& state,
                          const std::map<std::string, CheckpointTensor>& extra = {});

// Rebuilds a ModelState from a checkpoint, validating shapes against the
// stored config. Ignores trainer.* / adam.* entries.
ModelState stateFromCheckpoint(const Checkpoint& ckpt);

}  // namespace stt
