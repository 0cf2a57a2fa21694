#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stt/midi.hpp"

namespace stt {

// Onset vector resolution: one slot per 16th note.
constexpr int ONSET_SLOT_TICKS = 120;

// Binary onset vector over [from_tick, to_tick), one bit per 16th-note slot.
std::vector<std::uint8_t> onsetVector(const Melody& m, long from_tick, long to_tick);

// Theme Rhythm Correspondence: minimum Hamming distance between the theme's
// onset vector and any same-length slot window of the continuation, sliding
// at stride one slot. Windows starting before exclude_prefix_slots are
// skipped (they overlap the prompt region of a generated piece).
long trc(const Melody& theme, const Melody& continuation, int exclude_prefix_slots = 0);

// Theme Pitch Correspondence: same idea over pitch sequences, stride one note.
long tpc(const Melody& theme, const Melody& continuation, int exclude_prefix_notes = 0);

struct PscConfig {
  // Degrees relative to the tonic worth 6 points (the ornament tones
  // F, F#, B, Bb). Everything outside the pentatonic set {0,2,4,7,9} and this
  // set scores -10.
  std::vector<int> ornament_degrees = {5, 6, 10, 11};
};

// Pentatonic Scale Consistency: mean of the 10 / 6 / -10 per-note scores.
double psc(const Melody& m, int tonic_pitch_class, const PscConfig& cfg = {});

// Most frequent pitch class of the final bar (ties go to the lowest class).
int detectTonic(const Melody& m);

// Shannon entropy (bits) of the melody's pitch distribution.
double pitchEntropy(const Melody& m);
// Shannon entropy (bits) over the 12 pitch classes.
double pitchClassEntropy(const Melody& m);
// Groove consistency: mean over consecutive bar pairs of
// 1 - hamming(bar_b, bar_{b+1}) / slots_per_bar. Errors on single-bar input.
double grooveConsistency(const Melody& m);

struct SongMetrics {
  double tpc = 0, trc = 0, rc = 0, psc = 0, pce = 0, pe = 0;
};

struct MetricReport {
  std::vector<std::pair<std::string, SongMetrics>> rows;
  SongMetrics mean;
};

struct EvaluateOptions {
  std::optional<int> tonic;  // fixed tonic pitch class; unset = auto-detect
  int prompt_bars = 2;       // theme length; also the excluded prompt region
  PscConfig psc;
};

// Per-song metrics plus corpus means. Themes align with songs by index; the
// theme piece is each theme melody's first prompt_bars bars.
MetricReport evaluateCorpus(const std::vector<std::pair<std::string, Melody>>& songs,
                            const std::vector<Melody>& themes,
                            const EvaluateOptions& opts = {});

// Tab-separated report matching the column order TPC TRC RC PSC PCE PE, one
// row per song plus a MEAN row; RC is printed as a percentage.
std::string reportToTsv(const MetricReport& report);

}  // namespace stt
