#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stt/midi.hpp"

namespace stt {

enum class CorpusStyle { Pentatonic, Chromatic };

// A generated song together with its ground-truth phrase labels.
struct SyntheticSong {
  Melody melody;
  std::vector<int> phrase_labels;  // one per note, 1-based phrase index
};

// Deterministic synthetic corpus: 4-8 phrases of 2 bars each, 2/4 or 4/4,
// durations from {120, 240, 480, 960}. Pentatonic songs stay on pitch classes
// {C,D,E,G,A} and cadence on C in the final bar so the tonic detector lands on
// C; chromatic songs draw from all twelve classes.
std::vector<SyntheticSong> makeSyntheticCorpus(int n_songs, std::uint64_t seed, CorpusStyle style);

enum class Split { Train, Test };

struct ManifestEntry {
  std::string path;
  Split split = Split::Train;
  int note_count = 0;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
};

struct CorpusItem {
  std::string path;
  int note_count = 0;
};

// Seeded shuffle split. The test set gets floor(n * (1 - ratio)) entries, so
// the train side keeps the remainder; entries stay in input order.
CorpusManifest splitCorpus(const std::vector<CorpusItem>& items, double ratio, std::uint64_t seed);

// Line-oriented manifest file: "# seed <n>" then "path<TAB>split<TAB>notes".
std::string manifestToText(const CorpusManifest& manifest);
CorpusManifest manifestFromText(const std::string& text);

void saveManifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest loadManifest(const std::string& path);

}  // namespace stt
