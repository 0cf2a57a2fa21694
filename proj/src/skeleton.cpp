#include "stt/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stt {

SkeletonAnnotation extractSkeleton(const Melody& melody, const PhraseLabels& labels,
                                   const SkeletonConfig& config) {
  validateLabels(labels, melody.notes.size());
  std::size_t n = melody.notes.size();
  SkeletonAnnotation ann;
  ann.flags.assign(n, 0);
  ann.selected.assign(n, 0);

  long beat = beatTicks(melody.time_signature);
  long bar = barTicks(melody.time_signature);
  long long_ticks =
      static_cast<long>(std::lround(config.long_note_beats * static_cast<double>(beat)));

  for (std::size_t i = 0; i < n; ++i) {
    const NoteEvent& note = melody.notes[i];

    // Trembling: same pitch returns across 1..max_between strictly shorter
    // ornamental notes, all within one phrase. Both endpoints are flagged.
    for (int between = 1; between <= config.trembling_max_between; ++between) {
      std::size_t j = i + static_cast<std::size_t>(between) + 1;
      if (j >= n) break;
      if (labels[j] != labels[i]) break;
      if (melody.notes[j].pitch != note.pitch) continue;
      bool ornamental = true;
      for (std::size_t k = i + 1; k < j; ++k) {
        if (!(melody.notes[k].duration < note.duration &&
              melody.notes[k].duration < melody.notes[j].duration)) {
          ornamental = false;
          break;
        }
      }
      if (ornamental) {
        ann.flags[i] |= FLAG_TREMBLING;
        ann.flags[j] |= FLAG_TREMBLING;
      }
    }

    // Metrical accent: beat 1 of any bar, plus beat 3 in 4/x meters.
    long in_bar = note.onset % bar;
    if (in_bar == 0) ann.flags[i] |= FLAG_METRICAL_ACCENT;
    if (melody.time_signature.numerator == 4 && in_bar == 2 * beat)
      ann.flags[i] |= FLAG_METRICAL_ACCENT;

    // Syncopation: off the beat grid and ringing across the next beat line.
    if (note.onset % beat != 0) {
      long next_beat = (note.onset / beat + 1) * beat;
      if (note.onset + note.duration > next_beat) ann.flags[i] |= FLAG_SYNCOPATION;
    }

    if (note.duration >= long_ticks) ann.flags[i] |= FLAG_LONG_NOTE;

    ann.selected[i] = ann.flags[i] != 0;
  }

  // Fallback: a phrase with nothing flagged keeps its longest note.
  for (const auto& [first, last] : phraseSpans(labels)) {
    bool any = false;
    for (int i = first; i <= last; ++i) any = any || ann.selected[i];
    if (any) continue;
    int pick = first;
    for (int i = first + 1; i <= last; ++i)
      if (melody.notes[i].duration > melody.notes[pick].duration) pick = i;
    ann.selected[pick] = 1;
    ann.flags[pick] |= FLAG_LONG_NOTE;
  }
  return ann;
}

SkeletonAnnotation removeFraction(const SkeletonAnnotation& ann, const PhraseLabels& labels,
                                  double fraction, std::uint64_t seed) {
  if (ann.flags.size() != labels.size() || ann.selected.size() != labels.size())
    throw DataError("annotation does not match phrase labels");
  if (fraction < 0.0 || fraction >= 1.0) throw UsageError("removal fraction must be in [0, 1)");

  SkeletonAnnotation out = ann;
  auto spans = phraseSpans(labels);
  for (std::size_t p = 0; p < spans.size(); ++p) {
    std::vector<int> chosen;
    for (int i = spans[p].first; i <= spans[p].second; ++i)
      if (out.selected[i]) chosen.push_back(i);
    if (chosen.empty()) continue;
    std::size_t k = chosen.size();
    std::size_t remove = static_cast<std::size_t>(std::floor(static_cast<double>(k) * fraction));
    if (remove >= k) remove = k - 1;  // every phrase keeps at least one
    Rng rng(mixSeed(seed, static_cast<std::uint64_t>(p)));
    rng.shuffle(chosen);
    for (std::size_t r = 0; r < remove; ++r) out.selected[chosen[r]] = 0;
  }
  return out;
}

TokenSequence skeletonSequence(const Melody& melody, const PhraseLabels& labels,
                               const SkeletonAnnotation& ann) {
  validateLabels(labels, melody.notes.size());
  if (ann.selected.size() != melody.notes.size())
    throw DataError("annotation does not match melody");

  Melody picked;
  picked.time_signature = melody.time_signature;
  PhraseLabels picked_labels;
  for (std::size_t i = 0; i < melody.notes.size(); ++i) {
    if (!ann.selected[i]) continue;
    picked.notes.push_back(melody.notes[i]);
    picked_labels.push_back(labels[i]);
  }
  if (picked.notes.empty()) throw ContractViolation("skeleton selection is empty");

  TokenSequence seq = encode(picked, picked_labels);
  seq.kind = SequenceKind::Skeleton;
  return seq;
}

std::string annotationToText(const SkeletonAnnotation& ann) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ann.flags.size(); ++i) {
    out << i << ' ';
    unsigned f = ann.flags[i];
    if (!f) {
      out << '-';
    } else {
      if (f & FLAG_TREMBLING) out << 'T';
      if (f & FLAG_METRICAL_ACCENT) out << 'M';
      if (f & FLAG_SYNCOPATION) out << 'S';
      if (f & FLAG_LONG_NOTE) out << 'L';
    }
    out << ' ' << (ann.selected[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

SkeletonAnnotation annotationFromText(const std::string& text) {
  SkeletonAnnotation ann;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t index;
    std::string flags;
    int selected;
    if (!(fields >> index >> flags >> selected))
      throw DataError("bad skeleton annotation line: " + line);
    if (index != ann.flags.size())
      throw DataError("skeleton annotation indices must be consecutive");
    unsigned f = 0;
    for (char c : flags) {
      switch (c) {
        case 'T': f |= FLAG_TREMBLING; break;
        case 'M': f |= FLAG_METRICAL_ACCENT; break;
        case 'S': f |= FLAG_SYNCOPATION; break;
        case 'L': f |= FLAG_LONG_NOTE; break;
        case '-': break;
        default: throw DataError("bad skeleton flag character: " + std::string(1, c));
      }
    }
    ann.flags.push_back(f);
    ann.selected.push_back(static_cast<char>(selected != 0));
  }
  return ann;
}

void saveAnnotation(const SkeletonAnnotation& ann, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write skeleton annotation: " + path);
  out << annotationToText(ann);
}

SkeletonAnnotation loadAnnotation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open skeleton annotation: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return annotationFromText(buf.str());
}

}  // namespace stt
