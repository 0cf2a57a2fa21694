#include "doctest.h"
#include "helpers.hpp"
#include "stt/midi.hpp"

using namespace stt;
using testutil::SmfBuilder;

namespace {
Melody parsed(const std::vector<std::uint8_t>& bytes) {
  return std::get<Melody>(parseMidi(bytes));
}
}  // namespace

TEST_CASE("single quarter note at 480 tpq parses identically") {
  SmfBuilder smf(480);
  smf.timeSignature(0, 4, 2);
  smf.noteOn(0, 77);
  smf.noteOff(480, 77);
  Melody m = parsed(smf.bytes());
  REQUIRE(m.notes.size() == 1);
  CHECK(m.notes[0] == NoteEvent{77, 0, 480});
  CHECK(m.time_signature == TimeSignature{4, 4});
}

TEST_CASE("960 tpq eighth note rescales to 240 ticks") {
  SmfBuilder smf(960);
  smf.timeSignature(0, 4, 2);
  smf.noteOn(0, 60);
  smf.noteOff(480, 60);  // eighth note at 960 tpq
  Melody m = parsed(smf.bytes());
  REQUIRE(m.notes.size() == 1);
  CHECK(m.notes[0].duration == 240);
}

TEST_CASE("overlap resolves by truncating the earlier note") {
  SmfBuilder smf(480);
  smf.timeSignature(0, 4, 2);
  smf.noteOn(0, 60);
  smf.noteOn(450, 62);  // overlaps the first note by 30 ticks
  smf.noteOff(480, 60);
  smf.noteOff(900, 62);
  Melody m = parsed(smf.bytes());
  REQUIRE(m.notes.size() == 2);
  // 450 snaps to 480; the first note ends exactly at the second onset.
  CHECK(m.notes[0].onset + m.notes[0].duration == m.notes[1].onset);
  CHECK(m.notes[1].onset == 480);
}

TEST_CASE("denominator other than 4 is a filter signal, not an error") {
  SmfBuilder smf(480);
  smf.timeSignature(0, 6, 3);  // 6/8
  smf.noteOn(0, 70);
  smf.noteOff(480, 70);
  MidiParseResult r = parseMidi(smf.bytes());
  REQUIRE(std::holds_alternative<FilteredOut>(r));
  CHECK(std::get<FilteredOut>(r).time_signature == TimeSignature{6, 8});
  CHECK_THROWS_AS(parseMelodyStrict(smf.bytes()), DataError);
}

TEST_CASE("malformed input reports a byte offset") {
  std::vector<std::uint8_t> junk = {'M', 'T', 'h', 'd', 0, 0};
  try {
    parseMidi(junk);
    FAIL("expected MidiError");
  } catch (const MidiError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }

  SmfBuilder smpte(480);
  smpte.noteOn(0, 60);
  smpte.noteOff(480, 60);
  std::vector<std::uint8_t> bytes = smpte.bytes();
  bytes[12] = 0xE7;  // SMPTE division
  CHECK_THROWS_AS(parseMidi(bytes), MidiError);
}

TEST_CASE("a file with no notes is an empty-melody error") {
  SmfBuilder smf(480);
  smf.timeSignature(0, 4, 2);
  CHECK_THROWS_AS(parseMidi(smf.bytes()), EmptyMelodyError);
}

TEST_CASE("densest track is selected in type 1 files") {
  SmfBuilder smf(480);
  smf.timeSignature(0, 4, 2);
  smf.noteOn(0, 30);  // sparse track: one low note
  smf.noteOff(480, 30);
  smf.newTrack();
  for (int i = 0; i < 4; ++i) {  // dense melody track
    smf.noteOn(i * 480L, 70 + i);
    smf.noteOff(i * 480L + 480, 70 + i);
  }
  Melody m = parsed(smf.bytes(1));
  REQUIRE(m.notes.size() == 4);
  CHECK(m.notes[0].pitch == 70);
}

TEST_CASE("writeMidi rejects invalid melodies") {
  Melody empty;
  CHECK_THROWS_AS(writeMidi(empty), DataError);

  Melody off_grid;
  off_grid.notes = {{60, 30, 480}};
  CHECK_THROWS_AS(writeMidi(off_grid), DataError);
}

TEST_CASE("boundary pitch 127 survives a round trip") {
  Melody m;
  m.notes = {{127, 0, 60}, {0, 60, 3840}};
  m.title = "boundary";
  CHECK(parsed(writeMidi(m)) == m);
}

TEST_CASE("round trip is exact on fuzzed melodies") {
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    Melody m = testutil::randomMelody(rng, 1, 50, true, 4800);
    if (i % 3 == 0) m.title = "fuzz-" + std::to_string(i);
    Melody back = parsed(writeMidi(m));
    REQUIRE(back == m);
    // Idempotence: reparsing the rewritten file changes nothing.
    REQUIRE(parsed(writeMidi(back)) == back);
  }
}

TEST_CASE("parser output is always monophonic and quantized") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    int division = 96 + static_cast<int>(rng.uniformInt(900));
    SmfBuilder smf(division);
    smf.timeSignature(0, 4, 2);
    long tick = 0;
    int open_pitch = -1;
    for (int i = 0; i < 20; ++i) {
      int pitch = static_cast<int>(rng.uniformInt(128));
      if (open_pitch >= 0 && rng.uniformInt(2) == 0) {
        smf.noteOff(tick, open_pitch);
        open_pitch = -1;
      }
      smf.noteOn(tick, pitch);
      long len = 1 + rng.uniformInt(static_cast<std::uint32_t>(division * 2));
      if (rng.uniformInt(3) == 0) {
        open_pitch = pitch;  // left ringing over later onsets to force overlap
      } else {
        smf.noteOff(tick + len, pitch);
      }
      tick += 1 + rng.uniformInt(static_cast<std::uint32_t>(division));
    }
    if (open_pitch >= 0) smf.noteOff(tick + division, open_pitch);

    MidiParseResult result = parseMidi(smf.bytes());
    if (!std::holds_alternative<Melody>(result)) continue;
    const Melody& m = std::get<Melody>(result);
    long prev_end = 0;
    for (const NoteEvent& n : m.notes) {
      CHECK(n.onset % QUANT_STEP == 0);
      CHECK(n.duration % QUANT_STEP == 0);
      CHECK(n.duration >= QUANT_STEP);
      CHECK(n.onset >= prev_end);
      prev_end = n.onset + n.duration;
    }
  }
}
