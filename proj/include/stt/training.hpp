#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stt/checkpoint.hpp"
#include "stt/model.hpp"

namespace stt {

struct TrainConfig {
  float learning_rate = 0.001f;
  int batch_size = 16;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_epsilon = 1e-8f;
  int max_steps = 1000;
  int checkpoint_interval = 500;
  std::uint64_t seed = 0;
  int max_sequence_length = 512;  // longer full sequences are truncated

  void validate() const;
};

struct AdamState {
  struct Moments {
    std::vector<float> m, v;
  };
  std::map<std::string, Moments> moments;
  long step = 0;

  static AdamState init(const ModelState& state);
};

// Next-token targets: the id sequence shifted left by one, PAD at the end.
std::vector<int> shiftedTargets(const std::vector<int>& ids);

// Mean over non-PAD positions of pitch cross-entropy plus duration
// cross-entropy (the two heads share the position count).
TensorPtr sequenceLoss(const TensorPtr& pitch_logits, const TensorPtr& duration_logits,
                       const TokenSequence& full);

// One bias-corrected Adam update from the gradients accumulated in `state`.
// Throws DataError naming the first parameter with a non-finite gradient.
void adamStep(ModelState& state, AdamState& adam, const TrainConfig& cfg);

struct TrainSample {
  std::string name;
  TokenSequence full;
  TokenSequence skeleton;
};

struct TrainHooks {
  // Called once per step with the batch-mean loss.
  std::function<void(long step, double loss)> on_step;
  // Called at every checkpoint interval and after the last step.
  std::function<void(long step, const ModelState&, const AdamState&)> on_checkpoint;
};

// Teacher-forced training. Data order reshuffles every epoch from the seed;
// dropout noise is derived statelessly from (seed, step, slot) so a resumed
// run replays the exact trajectory of an uninterrupted one.
void train(const std::vector<TrainSample>& samples, ModelState& state, AdamState& adam,
           const ModelConfig& model_cfg, const TrainConfig& cfg, const TrainHooks& hooks = {});

// Truncates the full sequence of a sample to the configured maximum.
TokenSequence truncateSequence(const TokenSequence& seq, int max_len);

// Checkpoint helpers that carry Adam moments and the step counter.
Checkpoint trainerCheckpoint(const ModelConfig& cfg, const ModelState& state,
                             const AdamState& adam);
void restoreTrainer(const Checkpoint& ckpt, ModelState& state, AdamState& adam);

}  // namespace stt
