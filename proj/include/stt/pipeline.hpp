#pragma once

#include <string>
#include <vector>

#include "stt/corpus.hpp"
#include "stt/run_config.hpp"

namespace stt {

// Data directory convention: manifest.txt plus, per song, <name>.mid and the
// sidecars <name>.labels (phrase labels) and <name>.skeleton (annotation).

struct PipelineSong {
  std::string name;  // file stem
  std::string midi_path;
  Split split = Split::Train;
  Melody melody;
};

std::string midiPath(const std::string& data_dir, const std::string& name);
std::string labelsPath(const std::string& data_dir, const std::string& name);
std::string skeletonPath(const std::string& data_dir, const std::string& name);
std::string tokensPath(const std::string& dir, const std::string& name);

// Writes song_###.mid, ground-truth .labels sidecars and manifest.txt.
void synthesizeCorpus(const std::string& out_dir, int n_songs, std::uint64_t seed,
                      const std::string& style, double split_ratio, std::uint64_t split_seed);

struct IngestStats {
  int accepted = 0;
  int filtered = 0;  // time signature denominator != 4
  int failed = 0;    // parse errors (reported, not fatal)
};

// Parses every .mid under in_dir (sorted), writes normalized copies plus a
// manifest into out_dir.
IngestStats ingestCorpus(const std::string& in_dir, const std::string& out_dir,
                         double split_ratio, std::uint64_t seed);

std::vector<PipelineSong> loadSongs(const std::string& data_dir);

// Phrase labels for one song under the configured segmenter. External loads
// the sidecar (and errors when it is missing); Expansion expands the sidecar
// labels when present, else the heuristic result.
PhraseLabels resolveLabels(const std::string& data_dir, const PipelineSong& song,
                           SegmenterKind kind, const HeuristicConfig& heuristic);

// Writes .labels sidecars for every song in the manifest.
void segmentCorpus(const std::string& data_dir, SegmenterKind kind,
                   const HeuristicConfig& heuristic);

// Writes .skeleton sidecars (optionally after the Remove-50% ablation).
void skeletonCorpus(const std::string& data_dir, const RunConfig& cfg, SegmenterKind kind);

// (full, skeleton) pairs for the given split, under a segmenter/skeleton
// variant. The remove seed is mixed with the song index.
std::vector<TrainSample> buildSamples(const std::string& data_dir,
                                      const std::vector<PipelineSong>& songs, SegmenterKind kind,
                                      const RunConfig& cfg, bool remove_half);

// Table 2 ablation axes.
struct AblationVariant {
  SegmenterKind segmenter;  // resolved "ours" for groups 1 and 5
  bool remove_half = false;
};
AblationVariant ablationVariant(int group, SegmenterKind ours);

// Stage drivers. Every run directory receives an echo of the effective
// config; outputs are deterministic given config + seeds.
void trainRun(const RunConfig& cfg, const std::string& data_dir, const std::string& run_dir,
              SegmenterKind kind, bool remove_half);
void generateRun(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& data_dir, const std::string& out_dir, SegmenterKind kind,
                 bool remove_half);
void evaluateRun(const RunConfig& cfg, const std::string& generated_dir,
                 const std::string& themes_dir, const std::string& report_path);
// End-to-end: data (synth when cfg.data_dir is empty), train, generate over
// the test split (train split when no test entries), evaluate.
void ablateRun(const RunConfig& cfg, int group, const std::string& run_dir);

}  // namespace stt
