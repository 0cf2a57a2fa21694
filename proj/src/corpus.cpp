#include "stt/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stt {

namespace {

constexpr int PENTATONIC_CLASSES[] = {0, 2, 4, 7, 9};  // C D E G A

int pickDuration(Rng& rng, long remaining) {
  // Weighted toward quarter/eighth notes; always fits because phrase lengths
  // are multiples of 120.
  static constexpr int DURATIONS[] = {120, 240, 480, 960};
  static constexpr int WEIGHTS[] = {15, 35, 30, 20};
  for (int attempt = 0; attempt < 8; ++attempt) {
    int roll = static_cast<int>(rng.uniformInt(100));
    int acc = 0;
    int dur = DURATIONS[0];
    for (int i = 0; i < 4; ++i) {
      acc += WEIGHTS[i];
      if (roll < acc) {
        dur = DURATIONS[i];
        break;
      }
    }
    if (dur <= remaining) return dur;
  }
  return 120;
}

}  // namespace

std::vector<SyntheticSong> makeSyntheticCorpus(int n_songs, std::uint64_t seed, CorpusStyle style) {
  if (n_songs < 1) throw UsageError("synthetic corpus needs at least one song");

  std::vector<SyntheticSong> songs;
  songs.reserve(n_songs);
  for (int s = 0; s < n_songs; ++s) {
    Rng rng(mixSeed(seed, static_cast<std::uint64_t>(s)));
    SyntheticSong song;
    Melody& m = song.melody;
    m.time_signature = rng.uniformInt(2) == 0 ? TimeSignature{2, 4} : TimeSignature{4, 4};
    m.title = "synthetic-" + std::to_string(s);

    int n_phrases = 4 + static_cast<int>(rng.uniformInt(5));  // 4..8
    long phrase_ticks = 2 * barTicks(m.time_signature);

    long onset = 0;
    for (int p = 1; p <= n_phrases; ++p) {
      long remaining = phrase_ticks;
      while (remaining > 0) {
        int dur = pickDuration(rng, remaining);
        int pitch;
        if (style == CorpusStyle::Pentatonic) {
          int pc = PENTATONIC_CLASSES[rng.uniformInt(5)];
          int octave = 60 + 12 * static_cast<int>(rng.uniformInt(2));  // C4 or C5
          pitch = octave + pc;
        } else {
          pitch = 48 + static_cast<int>(rng.uniformInt(37));  // C3..C6 chromatic
        }
        m.notes.push_back({pitch, onset, dur});
        song.phrase_labels.push_back(p);
        onset += dur;
        remaining -= dur;
      }
    }

    if (style == CorpusStyle::Pentatonic) {
      // Cadence: the final bar unanimously sounds the tonic.
      long span = melodySpan(m);
      long final_bar_start = span - barTicks(m.time_signature);
      for (NoteEvent& n : m.notes) {
        if (n.onset >= final_bar_start) n.pitch = n.pitch >= 66 ? 72 : 60;
      }
    }
    songs.push_back(std::move(song));
  }
  return songs;
}

CorpusManifest splitCorpus(const std::vector<CorpusItem>& items, double ratio, std::uint64_t seed) {
  if (items.empty()) throw DataError("cannot split an empty corpus");
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must be in (0, 1)");

  std::size_t n = items.size();
  // The epsilon keeps 10 * (1 - 0.9) from flooring to 0.
  std::size_t n_test =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - ratio) + 1e-9));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Split> split(n, Split::Train);
  for (std::size_t i = 0; i < n_test; ++i) split[order[i]] = Split::Test;

  CorpusManifest manifest;
  manifest.seed = seed;
  for (std::size_t i = 0; i < n; ++i)
    manifest.entries.push_back({items[i].path, split[i], items[i].note_count});
  return manifest;
}

std::string manifestToText(const CorpusManifest& manifest) {
  std::ostringstream out;
  out << "# seed " << manifest.seed << "\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << e.path << '\t' << (e.split == Split::Train ? "train" : "test") << '\t'
        << e.note_count << "\n";
  }
  return out.str();
}

CorpusManifest manifestFromText(const std::string& text) {
  CorpusManifest manifest;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream head(line.substr(1));
      std::string word;
      head >> word;
      if (word == "seed") head >> manifest.seed;
      continue;
    }
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw DataError("manifest line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    ManifestEntry e;
    e.path = line.substr(0, t1);
    std::string split = line.substr(t1 + 1, t2 - t1 - 1);
    if (split == "train")
      e.split = Split::Train;
    else if (split == "test")
      e.split = Split::Test;
    else
      throw DataError("manifest line " + std::to_string(line_no) + ": bad split tag '" + split + "'");
    e.note_count = std::stoi(line.substr(t2 + 1));
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void saveManifest(const CorpusManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << manifestToText(manifest);
}

CorpusManifest loadManifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return manifestFromText(buf.str());
}

}  // namespace stt
