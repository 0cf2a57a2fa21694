#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stt/representation.hpp"
#include "stt/tensor.hpp"

namespace stt {

struct ModelConfig {
  int d_model = 256;
  int n_layers_encoder = 6;
  int n_layers_decoder = 6;
  int n_heads = 8;
  int ffn_width = 1024;
  int max_relative_distance = 256;
  int max_segments = 64;
  float dropout = 0.1f;
  int pitch_vocab = Vocabulary::PITCH_VOCAB;
  int duration_vocab = Vocabulary::DURATION_VOCAB;
  // The attention equation scales by sqrt(d_model); set false for the
  // conventional per-head sqrt(d_k) in cross-attention.
  bool scale_by_d_model = true;

  int headDim() const { return d_model / n_heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Named parameter tensors in deterministic (map) order.
struct ModelState {
  std::map<std::string, TensorPtr> params;

  const TensorPtr& at(const std::string& name) const;
  std::vector<std::pair<std::string, TensorPtr>> entries() const;

  static ModelState init(const ModelConfig& cfg, std::uint64_t seed);
};

// Knobs for one forward pass. Dropout fires only when training is set and a
// generator is supplied.
struct ForwardOptions {
  bool training = false;
  bool use_phrase_mask = true;
  Rng* dropout_rng = nullptr;
};

// MF = W_MF . (P_emb (+) D_emb (+) S_emb), one fused row per token.
TensorPtr musicFusion(const ModelState& state, const ModelConfig& cfg,
                      const std::vector<int>& pitch_ids, const std::vector<int>& duration_ids,
                      const std::vector<int>& segments);

// PE = PE_index + PE_segment, both sinusoidal; constant (not learned).
TensorPtr positionalEncoding(int length, const std::vector<int>& segments, int d_model);

// The n x m {0, -inf} mask: zero exactly where full token r and skeleton token
// c share a segment id. Throws ContractViolation if some full segment has no
// skeleton column (an all-masked row).
TensorPtr buildPhraseMask(const std::vector<int>& full_segments,
                          const std::vector<int>& skeleton_segments);

// Parameter bundle for one attention block, fetched by name prefix.
struct AttentionParams {
  TensorPtr wq, bq, wk, bk, wv, bv, wo, bo;
  TensorPtr rel;  // relative-position embeddings, null for cross-attention
};
AttentionParams attentionParams(const ModelState& state, const std::string& prefix,
                                bool relative);

// Multi-head self-attention with learned relative-position logits; causal
// masks position t to attend only to positions <= t.
TensorPtr maskedRelativeSelfAttention(const AttentionParams& p, const TensorPtr& x, bool causal,
                                      const ModelConfig& cfg, const ForwardOptions& opts);

// Multi-head cross-attention restricted by the phrase mask (pass null to run
// unmasked). Queries come from the decoder stream, keys/values from the
// encoder output.
TensorPtr phraseLevelCrossAttention(const AttentionParams& p, const TensorPtr& decoder_stream,
                                    const TensorPtr& encoder_out, const TensorPtr& mask,
                                    const ModelConfig& cfg, const ForwardOptions& opts);

struct ForwardResult {
  TensorPtr pitch_logits;     // [n x pitch_vocab]
  TensorPtr duration_logits;  // [n x duration_vocab]
};

// Full encoder-decoder pass over one (skeleton, full) sequence pair.
ForwardResult forward(const ModelState& state, const ModelConfig& cfg,
                      const TokenSequence& skeleton, const TokenSequence& full,
                      const ForwardOptions& opts = {});

}  // namespace stt
