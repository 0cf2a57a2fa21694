#include "stt/segmentation.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stt {

SegmenterKind segmenterKindFromName(const std::string& name) {
  if (name == "external") return SegmenterKind::External;
  if (name == "heuristic") return SegmenterKind::Heuristic;
  if (name == "nosegment" || name == "no-segment") return SegmenterKind::NoSegment;
  if (name == "twobars" || name == "two-bars" || name == "2bars") return SegmenterKind::TwoBars;
  if (name == "expansion") return SegmenterKind::Expansion;
  throw UsageError("unknown segmenter kind: " + name);
}

const char* segmenterKindName(SegmenterKind kind) {
  switch (kind) {
    case SegmenterKind::External: return "external";
    case SegmenterKind::Heuristic: return "heuristic";
    case SegmenterKind::NoSegment: return "nosegment";
    case SegmenterKind::TwoBars: return "twobars";
    case SegmenterKind::Expansion: return "expansion";
  }
  return "?";
}

void validateLabels(const PhraseLabels& labels, std::size_t n_notes) {
  if (labels.size() != n_notes)
    throw DataError("phrase labels (" + std::to_string(labels.size()) +
                    ") do not match note count (" + std::to_string(n_notes) + ")");
  if (labels.empty()) throw DataError("phrase labels are empty");
  if (labels.front() != 1) throw DataError("first phrase label must be 1");
  for (std::size_t i = 1; i < labels.size(); ++i) {
    int step = labels[i] - labels[i - 1];
    if (step != 0 && step != 1)
      throw DataError("phrase labels must advance in steps of 0 or 1 (note " +
                      std::to_string(i) + ")");
  }
}

int phraseCount(const PhraseLabels& labels) { return labels.empty() ? 0 : labels.back(); }

namespace {

PhraseLabels segmentTwoBars(const Melody& melody) {
  long unit = 2 * barTicks(melody.time_signature);
  PhraseLabels labels;
  labels.reserve(melody.notes.size());
  long prev_group = -1;
  int label = 0;
  for (const NoteEvent& n : melody.notes) {
    long group = n.onset / unit;
    if (group != prev_group) {
      ++label;  // groups are compacted so labels never skip
      prev_group = group;
    }
    labels.push_back(label);
  }
  return labels;
}

PhraseLabels segmentHeuristic(const Melody& melody, const HeuristicConfig& cfg) {
  long beat = beatTicks(melody.time_signature);
  long rest_ticks = static_cast<long>(std::lround(cfg.rest_beats * static_cast<double>(beat)));
  long long_ticks = static_cast<long>(std::lround(cfg.long_note_beats * static_cast<double>(beat)));

  std::size_t n = melody.notes.size();
  std::vector<char> boundary_after(n, 0);
  int notes_in_phrase = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++notes_in_phrase;
    if (i + 1 >= n) break;
    const NoteEvent& cur = melody.notes[i];
    const NoteEvent& next = melody.notes[i + 1];
    bool rest_break = next.onset - (cur.onset + cur.duration) >= rest_ticks;
    bool long_break = cur.duration >= long_ticks && notes_in_phrase >= cfg.long_note_min_notes;
    bool enough = notes_in_phrase >= cfg.min_phrase_notes;
    if ((rest_break || long_break) && enough) {
      boundary_after[i] = 1;
      notes_in_phrase = 0;
    }
  }
  // A trailing fragment shorter than the minimum merges into the last phrase.
  if (notes_in_phrase < cfg.min_phrase_notes) {
    for (std::size_t i = n; i-- > 0;) {
      if (boundary_after[i]) {
        boundary_after[i] = 0;
        break;
      }
    }
  }

  PhraseLabels labels(n);
  int label = 1;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = label;
    if (boundary_after[i]) ++label;
  }
  return labels;
}

PhraseLabels expandLabels(const PhraseLabels& base) {
  PhraseLabels out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = (base[i] + 1) / 2;
  return out;
}

}  // namespace

PhraseLabels segment(const Melody& melody, SegmenterKind kind, const PhraseLabels* external,
                     const HeuristicConfig& config) {
  if (melody.notes.empty()) throw DataError("cannot segment an empty melody");

  PhraseLabels labels;
  switch (kind) {
    case SegmenterKind::External:
      if (!external) throw DataError("external segmentation requires labels");
      validateLabels(*external, melody.notes.size());
      labels = *external;
      break;
    case SegmenterKind::NoSegment:
      labels.assign(melody.notes.size(), 1);
      break;
    case SegmenterKind::TwoBars:
      labels = segmentTwoBars(melody);
      break;
    case SegmenterKind::Heuristic:
      labels = segmentHeuristic(melody, config);
      break;
    case SegmenterKind::Expansion: {
      PhraseLabels base;
      if (external) {
        validateLabels(*external, melody.notes.size());
        base = *external;
      } else {
        base = segmentHeuristic(melody, config);
      }
      labels = expandLabels(base);
      break;
    }
  }
  validateLabels(labels, melody.notes.size());
  return labels;
}

std::vector<std::pair<int, int>> phraseSpans(const PhraseLabels& labels) {
  validateLabels(labels, labels.size());
  std::vector<std::pair<int, int>> spans;
  int start = 0;
  for (std::size_t i = 1; i <= labels.size(); ++i) {
    if (i == labels.size() || labels[i] != labels[start]) {
      spans.emplace_back(start, static_cast<int>(i) - 1);
      start = static_cast<int>(i);
    }
  }
  return spans;
}

std::string labelsToText(const PhraseLabels& labels) {
  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out << ' ';
    out << labels[i];
  }
  out << '\n';
  return out.str();
}

PhraseLabels labelsFromText(const std::string& text) {
  PhraseLabels labels;
  std::istringstream in(text);
  int v;
  while (in >> v) labels.push_back(v);
  return labels;
}

void saveLabels(const PhraseLabels& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write labels: " + path);
  out << labelsToText(labels);
}

PhraseLabels loadLabels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open labels: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return labelsFromText(buf.str());
}

}  // namespace stt
