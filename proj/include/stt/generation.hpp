#pragma once

#include <cstdint>

#include "stt/model.hpp"
#include "stt/segmentation.hpp"

namespace stt {

struct GenConfig {
  float temperature = 1.0f;
  int top_k = 0;  // 0 disables top-k filtering
  int max_tokens = 512;
  std::uint64_t seed = 0;
  bool greedy = false;

  void validate() const;
};

// Open prefix (BOS + the tokens of every note with onset inside the first
// `bars` bars, with PHRASE_END where a phrase closes in between). Errors if
// the melody spans fewer than `bars` bars.
TokenSequence extractPrompt(const Melody& melody, const PhraseLabels& labels, int bars = 2);

struct GenerationResult {
  Melody melody;
  TokenSequence tokens;  // closed sequence including the prompt
};

// Autoregressive decoding conditioned on a skeleton sequence. The running
// segment id starts at the prompt's last segment and advances exactly when
// PHRASE_END is emitted; PHRASE_END and EOS fire only when both heads agree
// under argmax, otherwise specials are suppressed and a note is sampled.
// Stops at EOS, at max_tokens, or when the segment would exceed the
// skeleton's phrase count.
GenerationResult generate(const ModelState& state, const ModelConfig& cfg,
                          const TokenSequence& skeleton, const TokenSequence& prompt,
                          const GenConfig& gen, TimeSignature ts = TimeSignature{4, 4});

}  // namespace stt
