#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stt/representation.hpp"
#include "stt/segmentation.hpp"

namespace stt {

// Skeleton note categories. Trembling is the pitch-dimension figure specific
// to Small Tunes; the other three are the rhythm-dimension criteria.
enum SkeletonFlag : unsigned {
  FLAG_TREMBLING = 1u << 0,
  FLAG_METRICAL_ACCENT = 1u << 1,
  FLAG_SYNCOPATION = 1u << 2,
  FLAG_LONG_NOTE = 1u << 3,
};

struct SkeletonAnnotation {
  std::vector<unsigned> flags;  // bitmask of SkeletonFlag per note
  std::vector<char> selected;   // in the skeleton or not
  bool operator==(const SkeletonAnnotation&) const = default;
};

struct SkeletonConfig {
  double long_note_beats = 1.5;     // LongNote threshold
  int trembling_max_between = 2;    // max ornamental notes inside a trembling figure
};

// Flags each note and selects the union. A phrase with no flagged note falls
// back to its longest note (earliest on ties), tagged LongNote by convention,
// so every phrase contributes at least one skeleton note.
SkeletonAnnotation extractSkeleton(const Melody& melody, const PhraseLabels& labels,
                                   const SkeletonConfig& config = {});

// The Remove-50% ablation: within each phrase independently, deselects
// floor(k * fraction) of the k selected notes, always keeping at least one.
SkeletonAnnotation removeFraction(const SkeletonAnnotation& ann, const PhraseLabels& labels,
                                  double fraction, std::uint64_t seed);

// Token sequence over the selected notes only, keeping their original phrase
// ids so full and skeleton sequences share the segment vocabulary.
TokenSequence skeletonSequence(const Melody& melody, const PhraseLabels& labels,
                               const SkeletonAnnotation& ann);

// Sidecar format: one line per note, "index flags selected" where flags is a
// subset of "TMSL" or "-".
std::string annotationToText(const SkeletonAnnotation& ann);
SkeletonAnnotation annotationFromText(const std::string& text);
void saveAnnotation(const SkeletonAnnotation& ann, const std::string& path);
SkeletonAnnotation loadAnnotation(const std::string& path);

}  // namespace stt
