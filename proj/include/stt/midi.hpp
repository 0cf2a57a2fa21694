#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stt/common.hpp"

namespace stt {

// All melodies are normalized to this tick resolution; an eighth note is 240
// ticks, matching the duration values in the token format.
constexpr int TICKS_PER_QUARTER = 480;
// Quantization grid: 32nd note.
constexpr int QUANT_STEP = 60;

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;
  bool operator==(const TimeSignature&) const = default;
};

struct NoteEvent {
  int pitch = 0;       // MIDI note number, 0-127
  long onset = 0;      // ticks, multiple of QUANT_STEP
  long duration = 0;   // ticks, multiple of QUANT_STEP, >= QUANT_STEP
  bool operator==(const NoteEvent&) const = default;
};

struct Melody {
  std::vector<NoteEvent> notes;  // sorted by onset, non-overlapping
  int ticks_per_quarter = TICKS_PER_QUARTER;
  TimeSignature time_signature;
  std::string title;
  bool operator==(const Melody&) const = default;
};

// Ticks per beat / per bar for a time signature (beat = denominator unit).
long beatTicks(const TimeSignature& ts);
long barTicks(const TimeSignature& ts);

// End tick of the last note (melodies start at tick 0).
long melodySpan(const Melody& m);

// Throws DataError if the melody violates its invariants.
void validateMelody(const Melody& m);

// A structurally valid file whose time signature denominator is not 4. This is
// a filter signal, not an error: such songs are skipped for training/eval.
struct FilteredOut {
  TimeSignature time_signature;
};

using MidiParseResult = std::variant<Melody, FilteredOut>;

// Parses an SMF type 0/1 file into a quantized monophonic melody.
// The densest track (most notes) is chosen; everything is rescaled to 480
// ticks per quarter and snapped to the 60-tick grid; overlaps are resolved by
// truncating the earlier note at the later note's onset.
// Throws MidiError (malformed input) or EmptyMelodyError (no notes survive).
MidiParseResult parseMidi(std::span<const std::uint8_t> bytes);

// parseMidi that treats FilteredOut as a DataError. For pipelines that already
// know the file passed the time-signature filter.
Melody parseMelodyStrict(std::span<const std::uint8_t> bytes);

// Serializes a melody as SMF type 0, 480 tpq, one track.
// parseMidi(writeMidi(m)) == m exactly for every valid melody.
std::vector<std::uint8_t> writeMidi(const Melody& melody);

// File helpers.
std::vector<std::uint8_t> readFileBytes(const std::string& path);
void writeFileBytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace stt
