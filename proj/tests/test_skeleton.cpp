#include "doctest.h"
#include "helpers.hpp"
#include "stt/skeleton.hpp"

using namespace stt;

namespace {

Melody gapless(std::initializer_list<std::pair<int, long>> pitch_durs, TimeSignature ts = {4, 4}) {
  Melody m;
  m.time_signature = ts;
  long onset = 0;
  for (auto [pitch, dur] : pitch_durs) {
    m.notes.push_back({pitch, onset, dur});
    onset += dur;
  }
  return m;
}

}  // namespace

TEST_CASE("the trembling figure flags both endpoints") {
  // A4, shorter passing note, back to A4 (the Molihua fragment's shape).
  Melody m = gapless({{69, 480}, {67, 240}, {69, 480}, {64, 480}});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1, 1});
  CHECK((ann.flags[0] & FLAG_TREMBLING));
  CHECK((ann.flags[2] & FLAG_TREMBLING));
  CHECK_FALSE((ann.flags[1] & FLAG_TREMBLING));
  CHECK_FALSE((ann.flags[3] & FLAG_TREMBLING));
}

TEST_CASE("trembling tolerates two ornaments but not three") {
  Melody two = gapless({{69, 480}, {67, 120}, {66, 120}, {69, 480}});
  SkeletonAnnotation ann2 = extractSkeleton(two, {1, 1, 1, 1});
  CHECK((ann2.flags[0] & FLAG_TREMBLING));
  CHECK((ann2.flags[3] & FLAG_TREMBLING));

  Melody three = gapless({{69, 480}, {67, 120}, {66, 120}, {65, 120}, {69, 480}});
  SkeletonAnnotation ann3 = extractSkeleton(three, {1, 1, 1, 1, 1});
  CHECK_FALSE((ann3.flags[0] & FLAG_TREMBLING));
}

TEST_CASE("trembling requires strictly shorter ornaments on both endpoints") {
  Melody equal = gapless({{69, 240}, {67, 240}, {69, 240}});
  SkeletonAnnotation ann = extractSkeleton(equal, {1, 1, 1});
  CHECK_FALSE((ann.flags[0] & FLAG_TREMBLING));
}

TEST_CASE("trembling does not cross phrase boundaries") {
  Melody m = gapless({{69, 480}, {67, 240}, {69, 480}});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 2});
  CHECK_FALSE((ann.flags[0] & FLAG_TREMBLING));
}

TEST_CASE("four quarter notes in a 4/4 bar accent beats one and three") {
  Melody m = gapless({{60, 480}, {62, 480}, {64, 480}, {65, 480}});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1, 1});
  CHECK((ann.flags[0] & FLAG_METRICAL_ACCENT));
  CHECK_FALSE((ann.flags[1] & FLAG_METRICAL_ACCENT));
  CHECK((ann.flags[2] & FLAG_METRICAL_ACCENT));
  CHECK_FALSE((ann.flags[3] & FLAG_METRICAL_ACCENT));
  for (unsigned f : ann.flags) {
    CHECK_FALSE((f & FLAG_SYNCOPATION));
    CHECK_FALSE((f & FLAG_LONG_NOTE));
  }
}

TEST_CASE("in 2/4 only beat one is accented") {
  Melody m = gapless({{60, 480}, {62, 480}, {64, 480}, {65, 480}}, {2, 4});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1, 1});
  CHECK((ann.flags[0] & FLAG_METRICAL_ACCENT));
  CHECK_FALSE((ann.flags[1] & FLAG_METRICAL_ACCENT));
  CHECK((ann.flags[2] & FLAG_METRICAL_ACCENT));  // bar 2, beat 1
  CHECK_FALSE((ann.flags[3] & FLAG_METRICAL_ACCENT));
}

TEST_CASE("syncopation needs an off-beat onset that crosses the beat line") {
  // Eighth at beat 1, then an off-beat quarter ringing across beat 2.
  Melody m = gapless({{60, 240}, {62, 480}, {64, 240}, {65, 960}});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1, 1});
  CHECK_FALSE((ann.flags[0] & FLAG_SYNCOPATION));  // on the beat
  CHECK((ann.flags[1] & FLAG_SYNCOPATION));        // onset 240, ends 720 > 480
  CHECK_FALSE((ann.flags[2] & FLAG_SYNCOPATION));  // onset 720, ends 960, no crossing
  CHECK_FALSE((ann.flags[3] & FLAG_SYNCOPATION));  // onset 960 is on the beat
}

TEST_CASE("long notes need 1.5 beats") {
  Melody m = gapless({{60, 660}, {62, 720}, {64, 540}});
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1});
  CHECK_FALSE((ann.flags[0] & FLAG_LONG_NOTE));
  CHECK((ann.flags[1] & FLAG_LONG_NOTE));
  CHECK_FALSE((ann.flags[2] & FLAG_LONG_NOTE));
}

TEST_CASE("flagless phrase falls back to its earliest longest note") {
  // Off-downbeat sixteenths that never cross a beat line: no flags anywhere.
  Melody m;
  m.time_signature = {4, 4};
  m.notes = {{60, 60, 120}, {62, 540, 120}, {64, 1020, 120}, {65, 1500, 120}};
  SkeletonAnnotation ann = extractSkeleton(m, {1, 1, 1, 1});
  // Oracle: brute-force check that no rule fires on this construction (the
  // fallback then tags the picked note LongNote by convention).
  for (std::size_t i = 1; i < 4; ++i) CHECK(ann.flags[i] == 0u);
  CHECK(ann.selected == std::vector<char>{1, 0, 0, 0});
  CHECK(ann.flags[0] == FLAG_LONG_NOTE);
}

TEST_CASE("every phrase keeps at least one skeleton note") {
  Rng rng(501);
  for (int i = 0; i < 200; ++i) {
    Melody m = testutil::randomMelody(rng, 1, 40);
    PhraseLabels labels = testutil::randomLabels(rng, m.notes.size());
    SkeletonAnnotation ann = extractSkeleton(m, labels);
    for (const auto& [first, last] : phraseSpans(labels)) {
      bool any = false;
      for (int k = first; k <= last; ++k) any = any || ann.selected[k];
      CHECK(any);
    }
    // Selected notes are flagged; trembling flags come in pairs.
    for (std::size_t k = 0; k < ann.selected.size(); ++k)
      if (ann.selected[k]) CHECK(ann.flags[k] != 0u);
  }
}

TEST_CASE("trembling is symmetric") {
  Rng rng(502);
  for (int i = 0; i < 100; ++i) {
    Melody m = testutil::randomMelody(rng, 2, 30, false, 960);
    for (NoteEvent& n : m.notes) n.pitch = 60 + static_cast<int>(rng.uniformInt(4));
    PhraseLabels labels = testutil::randomLabels(rng, m.notes.size());
    SkeletonAnnotation ann = extractSkeleton(m, labels);
    for (std::size_t a = 0; a < m.notes.size(); ++a) {
      if (!(ann.flags[a] & FLAG_TREMBLING)) continue;
      bool has_partner = false;
      for (std::size_t b = 0; b < m.notes.size(); ++b) {
        if (a == b || m.notes[b].pitch != m.notes[a].pitch) continue;
        if ((ann.flags[b] & FLAG_TREMBLING) && labels[a] == labels[b]) has_partner = true;
      }
      CHECK(has_partner);
    }
  }
}

TEST_CASE("remove_fraction keeps singletons and halves quadruples") {
  Melody m = gapless({{60, 960}, {62, 960}, {64, 960}, {65, 960}, {67, 960}});
  PhraseLabels labels = {1, 1, 1, 1, 2};
  SkeletonAnnotation ann = extractSkeleton(m, labels);  // all long notes, all selected
  REQUIRE(ann.selected == std::vector<char>{1, 1, 1, 1, 1});

  SkeletonAnnotation out = removeFraction(ann, labels, 0.5, 9);
  int phrase1 = out.selected[0] + out.selected[1] + out.selected[2] + out.selected[3];
  CHECK(phrase1 == 2);              // floor(4/2) removed
  CHECK(out.selected[4] == 1);      // floor(1/2) = 0 removed
  CHECK(removeFraction(ann, labels, 0.5, 9) == out);  // deterministic
  SkeletonAnnotation other = removeFraction(ann, labels, 0.5, 10);
  bool differs = !(other == out);
  (void)differs;  // different seeds may or may not coincide on tiny phrases
}

TEST_CASE("skeleton sequence of a full selection equals the full sequence") {
  Rng rng(503);
  Melody m = testutil::randomMelody(rng, 3, 20, true, 3840);
  PhraseLabels labels = testutil::randomLabels(rng, m.notes.size());
  SkeletonAnnotation all;
  all.flags.assign(m.notes.size(), FLAG_LONG_NOTE);
  all.selected.assign(m.notes.size(), 1);
  TokenSequence skeleton = skeletonSequence(m, labels, all);
  TokenSequence full = encode(m, labels);
  CHECK(skeleton.triplets == full.triplets);
  CHECK(skeleton.kind == SequenceKind::Skeleton);
}

TEST_CASE("skeleton keeps original phrase ids and covers every phrase") {
  Rng rng(504);
  for (int i = 0; i < 100; ++i) {
    Melody m = testutil::randomMelody(rng, 1, 40, true, 3840);
    PhraseLabels labels = testutil::randomLabels(rng, m.notes.size());
    SkeletonAnnotation ann = extractSkeleton(m, labels);
    TokenSequence skeleton = skeletonSequence(m, labels, ann);
    // Subset: skeleton pitch/duration pairs appear in order in the melody.
    std::size_t cursor = 0;
    for (const NoteTriplet& t : skeleton.triplets) {
      if (Vocabulary::isSpecial(t.pitch)) continue;
      int pitch = Vocabulary::midiPitch(t.pitch);
      long dur = Vocabulary::durationTicks(t.duration);
      bool found = false;
      while (cursor < m.notes.size()) {
        long clamped = std::min<long>(m.notes[cursor].duration, Vocabulary::MAX_DURATION_TICKS);
        if (m.notes[cursor].pitch == pitch && clamped == dur) {
          found = true;
          ++cursor;
          break;
        }
        ++cursor;
      }
      CHECK(found);
    }
    // Every phrase id of the full sequence appears in the skeleton.
    for (int p = 1; p <= phraseCount(labels); ++p) {
      bool present = false;
      for (const NoteTriplet& t : skeleton.triplets)
        present = present || (!Vocabulary::isSpecial(t.pitch) && t.segment == p);
      CHECK(present);
    }
  }
}

TEST_CASE("two-note selections across phrases") {
  Melody m = gapless({{60, 480}, {62, 480}, {64, 480}, {65, 480}, {67, 480}, {69, 480}});
  PhraseLabels labels = {1, 1, 1, 2, 2, 2};
  SkeletonAnnotation ann;
  ann.flags.assign(6, 0u);
  ann.selected.assign(6, 0);
  ann.flags[0] = FLAG_METRICAL_ACCENT;
  ann.selected[0] = 1;
  ann.flags[5] = FLAG_LONG_NOTE;
  ann.selected[5] = 1;
  TokenSequence seq = skeletonSequence(m, labels, ann);
  REQUIRE(seq.size() == 5);  // BOS, note, PHRASE_END, note, EOS
  CHECK(seq.triplets[1].segment == 1);
  CHECK(seq.triplets[3].segment == 2);
}
