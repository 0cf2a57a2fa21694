#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stt/midi.hpp"

namespace stt {

// Shared id layout for the pitch and duration vocabularies. Id 0 is PAD in
// both; the three other specials line up so a triplet of specials uses the
// same id in both fields.
class Vocabulary {
 public:
  static constexpr int PAD = 0;
  static constexpr int BOS = 1;
  static constexpr int EOS = 2;
  static constexpr int PHRASE_END = 3;
  static constexpr int NUM_SPECIALS = 4;

  static constexpr int PITCH_VOCAB = NUM_SPECIALS + 128;  // 132
  static constexpr int MAX_DURATION_TICKS = 3840;         // two whole notes
  static constexpr int NUM_DURATIONS = MAX_DURATION_TICKS / QUANT_STEP;  // 64
  static constexpr int DURATION_VOCAB = NUM_SPECIALS + NUM_DURATIONS;    // 68

  static bool isSpecial(int id) { return id >= 0 && id < NUM_SPECIALS; }

  static int pitchId(int midi_pitch);      // MIDI 0-127 -> id
  static long durationId(long ticks);      // multiple of 60, clamped to 3840 -> id
  static int midiPitch(int id);            // inverse of pitchId; throws on specials
  static long durationTicks(int id);       // inverse of durationId; throws on specials
  static const char* specialName(int id);  // "PAD" / "BOS" / "EOS" / "PHRASE_END"
};

// One token: pitch id, duration id, 1-based phrase index (Fig. 2a's triplet).
struct NoteTriplet {
  int pitch = 0;
  int duration = 0;
  int segment = 1;
  bool operator==(const NoteTriplet&) const = default;
};

enum class SequenceKind { Full, Skeleton };

struct TokenSequence {
  std::vector<NoteTriplet> triplets;
  SequenceKind kind = SequenceKind::Full;

  std::size_t size() const { return triplets.size(); }
  std::vector<int> pitchIds() const;
  std::vector<int> durationIds() const;
  std::vector<int> segments() const;
  int lastSegment() const { return triplets.empty() ? 1 : triplets.back().segment; }
  bool operator==(const TokenSequence&) const = default;
};

// Melody + per-note phrase labels -> BOS, note triplets with PHRASE_END
// between phrases, EOS. Durations above the vocabulary cap are clamped.
TokenSequence encode(const Melody& melody, const std::vector<int>& labels);

// Structural validation of a closed sequence (BOS...EOS). Throws DataError
// naming the offending index.
void validateSequence(const TokenSequence& tokens);

// Inverse of encode under the gapless assumption: onsets accumulate from
// durations starting at 0.
Melody decode(const TokenSequence& tokens, TimeSignature ts = TimeSignature{4, 4});

// Text exchange format: triplets space-separated, each "pitch:duration:segment"
// with surface values (MIDI pitch / ticks) and special names spelled out.
std::string tokensToText(const TokenSequence& tokens);
TokenSequence tokensFromText(std::string_view line, SequenceKind kind = SequenceKind::Full);

void saveTokens(const TokenSequence& tokens, const std::string& path);
TokenSequence loadTokens(const std::string& path, SequenceKind kind = SequenceKind::Full);

// Token corpus file: one melody per line.
void saveTokenCorpus(const std::vector<TokenSequence>& corpus, const std::string& path);
std::vector<TokenSequence> loadTokenCorpus(const std::string& path,
                                           SequenceKind kind = SequenceKind::Full);

}  // namespace stt
