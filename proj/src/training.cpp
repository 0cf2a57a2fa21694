#include "stt/training.hpp"

#include <cmath>

#include "stt/kernels.hpp"

namespace stt {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0f || batch_size < 1 || adam_epsilon <= 0.0f || max_steps < 1 ||
      checkpoint_interval < 1 || max_sequence_length < 3)
    throw DataError("train config: all values must be positive");
  if (adam_beta1 <= 0.0f || adam_beta1 >= 1.0f || adam_beta2 <= 0.0f || adam_beta2 >= 1.0f)
    throw DataError("train config: Adam betas must be in (0, 1)");
}

AdamState AdamState::init(const ModelState& state) {
  AdamState adam;
  for (const auto& [name, param] : state.params) {
    adam.moments[name].m.assign(param->numel(), 0.0f);
    adam.moments[name].v.assign(param->numel(), 0.0f);
  }
  return adam;
}

std::vector<int> shiftedTargets(const std::vector<int>& ids) {
  std::vector<int> targets(ids.size(), Vocabulary::PAD);
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) targets[i] = ids[i + 1];
  return targets;
}

TensorPtr sequenceLoss(const TensorPtr& pitch_logits, const TensorPtr& duration_logits,
                       const TokenSequence& full) {
  if (pitch_logits->dim(0) != static_cast<int>(full.size()) ||
      duration_logits->dim(0) != static_cast<int>(full.size()))
    throw DataError("loss: logits do not match sequence length");
  TensorPtr pitch_ce =
      crossEntropyMean(pitch_logits, shiftedTargets(full.pitchIds()), Vocabulary::PAD);
  TensorPtr duration_ce =
      crossEntropyMean(duration_logits, shiftedTargets(full.durationIds()), Vocabulary::PAD);
  return add(pitch_ce, duration_ce);
}

void adamStep(ModelState& state, AdamState& adam, const TrainConfig& cfg) {
  for (const auto& [name, param] : state.params) {
    if (param->grad.size() != param->numel())
      param->grad.assign(param->numel(), 0.0f);  // parameter unused this step
    for (float g : param->grad)
      if (!std::isfinite(g))
        throw DataError("non-finite gradient in parameter " + name);
  }
  adam.step += 1;
  float b1t = std::pow(cfg.adam_beta1, static_cast<float>(adam.step));
  float b2t = std::pow(cfg.adam_beta2, static_cast<float>(adam.step));
  for (auto& [name, param] : state.params) {
    auto& mom = adam.moments.at(name);
    kernels::adamUpdate(param->value.data(), param->grad.data(), mom.m.data(), mom.v.data(),
                        param->numel(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                        cfg.adam_epsilon, b1t, b2t);
  }
}

TokenSequence truncateSequence(const TokenSequence& seq, int max_len) {
  if (static_cast<int>(seq.size()) <= max_len) return seq;
  TokenSequence out;
  out.kind = seq.kind;
  out.triplets.assign(seq.triplets.begin(), seq.triplets.begin() + max_len);
  return out;
}

void train(const std::vector<TrainSample>& samples, ModelState& state, AdamState& adam,
           const ModelConfig& model_cfg, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  model_cfg.validate();
  if (samples.empty()) throw DataError("training needs at least one sample");

  std::vector<std::size_t> order(samples.size());
  std::size_t cursor = order.size();  // forces a shuffle on first use
  long epoch = 0;

  auto nextSample = [&]() -> std::size_t {
    if (cursor >= order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng shuffle_rng(mixSeed(cfg.seed, 0xE70C4, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(order);
      cursor = 0;
      ++epoch;
    }
    return order[cursor++];
  };

  // Replay the data order consumed before a resume point.
  for (long s = 0; s < adam.step; ++s)
    for (int b = 0; b < cfg.batch_size; ++b) nextSample();

  for (long step = adam.step; step < cfg.max_steps; ++step) {
    for (auto& [name, param] : state.params) param->zeroGrad();

    double batch_loss = 0.0;
    float inv_batch = 1.0f / static_cast<float>(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TrainSample& sample = samples[nextSample()];
      TokenSequence full = truncateSequence(sample.full, cfg.max_sequence_length);

      Rng dropout_rng(mixSeed(cfg.seed, static_cast<std::uint64_t>(step),
                              static_cast<std::uint64_t>(b)));
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_rng = &dropout_rng;
      ForwardResult logits = forward(state, model_cfg, sample.skeleton, full, opts);
      TensorPtr loss = sequenceLoss(logits.pitch_logits, logits.duration_logits, full);
      batch_loss += loss->value[0];
      backward(scale(loss, inv_batch));
    }
    batch_loss /= cfg.batch_size;

    adamStep(state, adam, cfg);
    if (hooks.on_step) hooks.on_step(step, batch_loss);
    bool last = step + 1 == cfg.max_steps;
    if (hooks.on_checkpoint && ((step + 1) % cfg.checkpoint_interval == 0 || last))
      hooks.on_checkpoint(step + 1, state, adam);
  }
}

Checkpoint trainerCheckpoint(const ModelConfig& cfg, const ModelState& state,
                             const AdamState& adam) {
  std::map<std::string, CheckpointTensor> extra;
  for (const auto& [name, mom] : adam.moments) {
    const TensorPtr& param = state.at(name);
    extra["adam.m." + name] = CheckpointTensor{param->shape, mom.m};
    extra["adam.v." + name] = CheckpointTensor{param->shape, mom.v};
  }
  extra["trainer.step"] = CheckpointTensor{{1}, {static_cast<float>(adam.step)}};
  return makeCheckpoint(cfg, state, extra);
}

void restoreTrainer(const Checkpoint& ckpt, ModelState& state, AdamState& adam) {
  state = stateFromCheckpoint(ckpt);
  adam = AdamState::init(state);
  for (auto& [name, mom] : adam.moments) {
    auto m_it = ckpt.tensors.find("adam.m." + name);
    auto v_it = ckpt.tensors.find("adam.v." + name);
    if (m_it == ckpt.tensors.end() || v_it == ckpt.tensors.end())
      throw DataError("checkpoint has no trainer state for " + name);
    mom.m = m_it->second.values;
    mom.v = v_it->second.values;
  }
  auto step_it = ckpt.tensors.find("trainer.step");
  if (step_it == ckpt.tensors.end()) throw DataError("checkpoint has no trainer step");
  adam.step = static_cast<long>(step_it->second.values.at(0));
}

}  // namespace stt
