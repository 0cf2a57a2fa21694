#include "stt/generation.hpp"

#include <algorithm>
#include <cmath>

namespace stt {

void GenConfig::validate() const {
  if (temperature <= 0.0f) throw DataError("generation temperature must be positive");
  if (top_k < 0) throw DataError("top_k must be >= 0");
  if (max_tokens < 0) throw DataError("max_tokens must be >= 0");
}

TokenSequence extractPrompt(const Melody& melody, const PhraseLabels& labels, int bars) {
  validateLabels(labels, melody.notes.size());
  if (bars < 1) throw UsageError("prompt must cover at least one bar");
  long limit = static_cast<long>(bars) * barTicks(melody.time_signature);
  if (melodySpan(melody) < limit)
    throw DataError("melody spans less than " + std::to_string(bars) + " bars");

  TokenSequence full = encode(melody, labels);
  // Count prompt notes, then cut the encoded sequence right after the last
  // prompt note triplet (trailing PHRASE_END is left for the model to emit).
  std::size_t prompt_notes = 0;
  for (const NoteEvent& n : melody.notes)
    if (n.onset < limit) ++prompt_notes;
  if (prompt_notes == 0) throw DataError("no notes inside the prompt window");

  TokenSequence prompt;
  prompt.kind = SequenceKind::Full;
  std::size_t seen = 0;
  for (const NoteTriplet& t : full.triplets) {
    bool is_note = !Vocabulary::isSpecial(t.pitch);
    if (is_note && seen == prompt_notes) break;
    if (t.pitch == Vocabulary::EOS) break;
    if (t.pitch == Vocabulary::PHRASE_END && seen == prompt_notes) break;
    prompt.triplets.push_back(t);
    if (is_note) ++seen;
  }
  return prompt;
}

namespace {

int argmaxRow(const float* row, int cols) {
  int best = 0;
  for (int c = 1; c < cols; ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

// Samples an id from masked logits under temperature / top-k; greedy takes the
// argmax of the allowed set.
int sampleId(const float* row, int cols, const std::vector<char>& allowed, const GenConfig& gen,
             Rng& rng) {
  int best = -1;
  for (int c = 0; c < cols; ++c)
    if (allowed[c] && (best < 0 || row[c] > row[best])) best = c;
  if (best < 0) throw ContractViolation("sampling: no allowed ids");
  if (gen.greedy) return best;

  std::vector<std::pair<float, int>> entries;
  entries.reserve(cols);
  for (int c = 0; c < cols; ++c)
    if (allowed[c]) entries.push_back({row[c], c});
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (gen.top_k > 0 && static_cast<int>(entries.size()) > gen.top_k) entries.resize(gen.top_k);

  double mx = entries.front().first;
  std::vector<double> weights(entries.size());
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    weights[i] = std::exp((entries[i].first - mx) / gen.temperature);
    total += weights[i];
  }
  double roll = static_cast<double>(rng.uniformFloat()) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    acc += weights[i];
    if (roll < acc) return entries[i].second;
  }
  return entries.back().second;
}

}  // namespace

GenerationResult generate(const ModelState& state, const ModelConfig& cfg,
                          const TokenSequence& skeleton, const TokenSequence& prompt,
                          const GenConfig& gen, TimeSignature ts) {
  gen.validate();
  cfg.validate();
  if (prompt.triplets.empty() || prompt.triplets.front().pitch != Vocabulary::BOS)
    throw DataError("prompt must start with BOS");
  int n_phrases = skeleton.lastSegment();
  int segment = prompt.lastSegment();
  if (segment > n_phrases)
    throw DataError("prompt segment " + std::to_string(segment) + " exceeds the skeleton's " +
                    std::to_string(n_phrases) + " phrases");

  TokenSequence seq = prompt;
  seq.kind = SequenceKind::Full;
  Rng rng(mixSeed(gen.seed, 0x6E6));
  bool closed = false;
  int special_streak = 0;

  std::vector<char> allowed_pitch(cfg.pitch_vocab, 0);
  for (int c = Vocabulary::NUM_SPECIALS; c < cfg.pitch_vocab; ++c) allowed_pitch[c] = 1;
  std::vector<char> allowed_duration(cfg.duration_vocab, 0);
  for (int c = Vocabulary::NUM_SPECIALS; c < cfg.duration_vocab; ++c) allowed_duration[c] = 1;

  for (int produced = 0; produced < gen.max_tokens; ++produced) {
    ForwardResult logits = forward(state, cfg, skeleton, seq, ForwardOptions{});
    int n = static_cast<int>(seq.size());
    const float* pitch_row =
        logits.pitch_logits->value.data() + static_cast<std::size_t>(n - 1) * cfg.pitch_vocab;
    const float* duration_row =
        logits.duration_logits->value.data() +
        static_cast<std::size_t>(n - 1) * cfg.duration_vocab;

    int pitch_argmax = argmaxRow(pitch_row, cfg.pitch_vocab);
    int duration_argmax = argmaxRow(duration_row, cfg.duration_vocab);

    if (pitch_argmax == Vocabulary::EOS && duration_argmax == Vocabulary::EOS) {
      seq.triplets.push_back({Vocabulary::EOS, Vocabulary::EOS, segment});
      closed = true;
      break;
    }
    if (pitch_argmax == Vocabulary::PHRASE_END && duration_argmax == Vocabulary::PHRASE_END) {
      if (segment >= n_phrases) break;  // phrase schedule exhausted
      seq.triplets.push_back({Vocabulary::PHRASE_END, Vocabulary::PHRASE_END, segment});
      segment += 1;
      if (++special_streak >= 8)
        throw DataError("generation stalled: 8 consecutive special tokens");
      continue;
    }

    int pitch = sampleId(pitch_row, cfg.pitch_vocab, allowed_pitch, gen, rng);
    int duration = sampleId(duration_row, cfg.duration_vocab, allowed_duration, gen, rng);
    seq.triplets.push_back({pitch, duration, segment});
    special_streak = 0;
  }
  if (!closed) seq.triplets.push_back({Vocabulary::EOS, Vocabulary::EOS, segment});

  GenerationResult out;
  out.tokens = std::move(seq);
  out.melody = decode(out.tokens, ts);
  return out;
}

}  // namespace stt
