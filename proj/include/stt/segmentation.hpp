#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stt/midi.hpp"

namespace stt {

// One 1-based phrase index per note: non-decreasing, starts at 1, steps of 0/1.
using PhraseLabels = std::vector<int>;

enum class SegmenterKind { External, Heuristic, NoSegment, TwoBars, Expansion };

SegmenterKind segmenterKindFromName(const std::string& name);
const char* segmenterKindName(SegmenterKind kind);

struct HeuristicConfig {
  double rest_beats = 1.0;       // gap >= this many beats ends a phrase
  double long_note_beats = 2.0;  // a note this long ends a phrase...
  int long_note_min_notes = 4;   // ...but only after this many notes
  int min_phrase_notes = 2;      // boundaries creating shorter phrases are deferred
};

void validateLabels(const PhraseLabels& labels, std::size_t n_notes);
int phraseCount(const PhraseLabels& labels);

// Produces phrase labels for a melody. External uses the provided labels
// verbatim; Expansion merges consecutive phrase pairs of the base labels
// (provided ones if present, else the heuristic result).
PhraseLabels segment(const Melody& melody, SegmenterKind kind,
                     const PhraseLabels* external = nullptr,
                     const HeuristicConfig& config = {});

// Inclusive (first, last) note index per phrase; spans partition [0, n).
std::vector<std::pair<int, int>> phraseSpans(const PhraseLabels& labels);

// Sidecar format: whitespace-separated integers, one per note.
std::string labelsToText(const PhraseLabels& labels);
PhraseLabels labelsFromText(const std::string& text);
void saveLabels(const PhraseLabels& labels, const std::string& path);
PhraseLabels loadLabels(const std::string& path);

}  // namespace stt
