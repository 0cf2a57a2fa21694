#include "stt/midi.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

namespace stt {

long beatTicks(const TimeSignature& ts) {
  if (ts.denominator <= 0) throw DataError("time signature denominator must be positive");
  return static_cast<long>(TICKS_PER_QUARTER) * 4 / ts.denominator;
}

long barTicks(const TimeSignature& ts) {
  if (ts.numerator <= 0) throw DataError("time signature numerator must be positive");
  return beatTicks(ts) * ts.numerator;
}

long melodySpan(const Melody& m) {
  if (m.notes.empty()) return 0;
  const NoteEvent& last = m.notes.back();
  return last.onset + last.duration;
}

void validateMelody(const Melody& m) {
  if (m.notes.empty()) throw DataError("melody has no notes");
  if (m.ticks_per_quarter != TICKS_PER_QUARTER)
    throw DataError("melody must use " + std::to_string(TICKS_PER_QUARTER) + " ticks per quarter");
  long prev_end = 0;
  for (std::size_t i = 0; i < m.notes.size(); ++i) {
    const NoteEvent& n = m.notes[i];
    if (n.pitch < 0 || n.pitch > 127)
      throw DataError("note " + std::to_string(i) + ": pitch out of range");
    if (n.onset < 0 || n.onset % QUANT_STEP != 0)
      throw DataError("note " + std::to_string(i) + ": onset not on quantization grid");
    if (n.duration < QUANT_STEP || n.duration % QUANT_STEP != 0)
      throw DataError("note " + std::to_string(i) + ": duration not on quantization grid");
    if (n.onset < prev_end)
      throw DataError("note " + std::to_string(i) + ": overlaps previous note");
    prev_end = n.onset + n.duration;
  }
}

namespace {

// --- SMF reading -------------------------------------------------------------

struct ByteReader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  bool eof() const { return pos >= data.size(); }

  std::uint8_t u8() {
    if (pos >= data.size()) throw MidiError("unexpected end of file", pos);
    return data[pos++];
  }

  std::uint32_t u16() {
    std::uint32_t hi = u8(), lo = u8();
    return (hi << 8) | lo;
  }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }

  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw MidiError("variable-length quantity too long", pos);
  }

  void skip(std::size_t n) {
    if (pos + n > data.size()) throw MidiError("unexpected end of file", pos);
    pos += n;
  }

  std::string bytes(std::size_t n) {
    if (pos + n > data.size()) throw MidiError("unexpected end of file", pos);
    std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
    pos += n;
    return s;
  }
};

struct RawNote {
  int pitch;
  long onset;   // original-division ticks
  long end;
};

struct TrackData {
  std::vector<RawNote> notes;
  std::string name;
};

// Reads one MTrk chunk, collecting note on/off pairs (FIFO per pitch) and
// the first time signature / track name seen.
TrackData readTrack(ByteReader& r, std::uint32_t length, bool& have_ts, TimeSignature& ts) {
  TrackData track;
  std::size_t track_end = r.pos + length;
  long tick = 0;
  std::uint8_t running = 0;
  std::deque<std::pair<long, int>> open[128];  // (onset, index into notes)

  auto closeNote = [&](int pitch, long end_tick) {
    auto& q = open[pitch];
    if (q.empty()) return;  // stray note-off, tolerated
    auto [onset, idx] = q.front();
    q.pop_front();
    track.notes[idx].end = end_tick > onset ? end_tick : onset;
  };

  while (r.pos < track_end) {
    tick += r.vlq();
    std::uint8_t b = r.u8();
    std::uint8_t status;
    std::uint8_t first_data;
    if (b & 0x80) {
      status = b;
      if (status < 0xF0) {
        running = status;
        first_data = r.u8();
      } else {
        first_data = 0;
      }
    } else {
      if (running == 0) throw MidiError("data byte without running status", r.pos - 1);
      status = running;
      first_data = b;
    }

    if (status >= 0xF0) {
      running = 0;  // sysex and meta events cancel running status
      if (status == 0xFF) {
        std::uint8_t type = r.u8();
        std::uint32_t len = r.vlq();
        if (type == 0x58 && len >= 2) {
          std::uint8_t nn = r.u8();
          std::uint8_t dd = r.u8();
          r.skip(len - 2);
          if (!have_ts) {
            ts.numerator = nn;
            ts.denominator = 1 << dd;
            have_ts = true;
          }
        } else if (type == 0x03) {
          std::string name = r.bytes(len);
          if (track.name.empty()) track.name = name;
        } else if (type == 0x2F) {
          r.skip(len);
          break;
        } else {
          r.skip(len);
        }
      } else if (status == 0xF0 || status == 0xF7) {
        std::uint32_t len = r.vlq();
        r.skip(len);
      } else {
        throw MidiError("unsupported system message", r.pos - 1);
      }
      continue;
    }

    std::uint8_t kind = status & 0xF0;
    switch (kind) {
      case 0x90: {
        std::uint8_t vel = r.u8();
        int pitch = first_data & 0x7F;
        if (vel > 0) {
          open[pitch].push_back({tick, static_cast<int>(track.notes.size())});
          track.notes.push_back({pitch, tick, tick});
        } else {
          closeNote(pitch, tick);
        }
        break;
      }
      case 0x80: {
        r.u8();  // release velocity
        closeNote(first_data & 0x7F, tick);
        break;
      }
      case 0xA0:
      case 0xB0:
      case 0xE0:
        r.u8();
        break;
      case 0xC0:
      case 0xD0:
        break;
      default:
        throw MidiError("unknown status byte", r.pos - 1);
    }
  }

  // Close any notes left hanging at end of track.
  for (int p = 0; p < 128; ++p) {
    while (!open[p].empty()) closeNote(p, tick);
  }
  // Drop zero-length raw notes (on immediately followed by off).
  std::erase_if(track.notes, [](const RawNote& n) { return n.end <= n.onset; });
  r.pos = track_end;
  return track;
}

long rescaleTick(long tick, long division) {
  // Rational rescale to 480 tpq, round half up.
  return (tick * TICKS_PER_QUARTER * 2 + division) / (2 * division);
}

long snapToGrid(long tick) {
  return (tick + QUANT_STEP / 2) / QUANT_STEP * QUANT_STEP;
}

}  // namespace

MidiParseResult parseMidi(std::span<const std::uint8_t> bytes) {
  ByteReader r{bytes};
  if (r.bytes(4) != "MThd") throw MidiError("missing MThd header", 0);
  std::uint32_t header_len = r.u32();
  if (header_len < 6) throw MidiError("header chunk too short", r.pos);
  std::uint32_t format = r.u16();
  std::uint32_t ntrks = r.u16();
  std::uint32_t division_raw = r.u16();
  r.skip(header_len - 6);

  if (format > 1) throw MidiError("only SMF type 0 and 1 are supported", 8);
  if (division_raw & 0x8000) throw MidiError("SMPTE time division not supported", 12);
  long division = division_raw;
  if (division == 0) throw MidiError("zero time division", 12);

  TimeSignature ts;  // default 4/4 when absent
  bool have_ts = false;
  std::vector<TrackData> tracks;
  for (std::uint32_t t = 0; t < ntrks; ++t) {
    if (r.bytes(4) != "MTrk") throw MidiError("missing MTrk chunk", r.pos - 4);
    std::uint32_t len = r.u32();
    if (r.pos + len > bytes.size()) throw MidiError("track length beyond end of file", r.pos - 4);
    tracks.push_back(readTrack(r, len, have_ts, ts));
  }

  // Densest track wins; ties go to the earliest.
  int best = -1;
  std::size_t best_count = 0;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (tracks[t].notes.size() > best_count) {
      best_count = tracks[t].notes.size();
      best = static_cast<int>(t);
    }
  }
  if (best < 0) throw EmptyMelodyError("no notes in any track");

  Melody melody;
  melody.time_signature = ts;
  melody.title = tracks[best].name;

  std::vector<NoteEvent> notes;
  for (const RawNote& raw : tracks[best].notes) {
    long onset = snapToGrid(rescaleTick(raw.onset, division));
    long end = snapToGrid(rescaleTick(raw.end, division));
    long duration = std::max<long>(end - onset, QUANT_STEP);
    notes.push_back({raw.pitch, onset, duration});
  }
  std::stable_sort(notes.begin(), notes.end(),
                   [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });

  // Monophony: truncate each note at the next onset; drop notes squeezed to zero.
  for (std::size_t i = 0; i + 1 < notes.size(); ++i) {
    if (notes[i].onset + notes[i].duration > notes[i + 1].onset)
      notes[i].duration = notes[i + 1].onset - notes[i].onset;
  }
  std::erase_if(notes, [](const NoteEvent& n) { return n.duration <= 0; });
  if (notes.empty()) throw EmptyMelodyError("no notes survive quantization");
  melody.notes = std::move(notes);

  if (melody.time_signature.denominator != 4) return FilteredOut{melody.time_signature};
  return melody;
}

Melody parseMelodyStrict(std::span<const std::uint8_t> bytes) {
  MidiParseResult result = parseMidi(bytes);
  if (std::holds_alternative<FilteredOut>(result)) {
    const auto& f = std::get<FilteredOut>(result);
    throw DataError("time signature denominator is " +
                    std::to_string(f.time_signature.denominator) + ", not 4");
  }
  return std::get<Melody>(std::move(result));
}

namespace {

void writeU16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back((v >> 8) & 0xFF);
  out.push_back(v & 0xFF);
}

void writeU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xFF);
}

void writeVlq(std::vector<std::uint8_t>& out, long v) {
  std::uint8_t buf[5];
  int n = 0;
  do {
    buf[n++] = v & 0x7F;
    v >>= 7;
  } while (v > 0);
  for (int i = n - 1; i >= 0; --i) out.push_back(buf[i] | (i > 0 ? 0x80 : 0x00));
}

int log2Exact(int v) {
  int e = 0;
  while ((1 << e) < v) ++e;
  if ((1 << e) != v) throw DataError("time signature denominator must be a power of two");
  return e;
}

}  // namespace

std::vector<std::uint8_t> writeMidi(const Melody& melody) {
  validateMelody(melody);

  std::vector<std::uint8_t> track;
  // Time signature at tick 0.
  writeVlq(track, 0);
  track.insert(track.end(), {0xFF, 0x58, 0x04});
  track.push_back(static_cast<std::uint8_t>(melody.time_signature.numerator));
  track.push_back(static_cast<std::uint8_t>(log2Exact(melody.time_signature.denominator)));
  track.insert(track.end(), {0x18, 0x08});
  if (!melody.title.empty()) {
    writeVlq(track, 0);
    track.insert(track.end(), {0xFF, 0x03});
    writeVlq(track, static_cast<long>(melody.title.size()));
    track.insert(track.end(), melody.title.begin(), melody.title.end());
  }

  struct Event {
    long tick;
    bool on;
    int pitch;
  };
  std::vector<Event> events;
  events.reserve(melody.notes.size() * 2);
  for (const NoteEvent& n : melody.notes) {
    events.push_back({n.onset, true, n.pitch});
    events.push_back({n.onset + n.duration, false, n.pitch});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    return !a.on && b.on;  // note-off before note-on at the same tick
  });

  long cursor = 0;
  for (const Event& e : events) {
    writeVlq(track, e.tick - cursor);
    cursor = e.tick;
    track.push_back(e.on ? 0x90 : 0x80);
    track.push_back(static_cast<std::uint8_t>(e.pitch));
    track.push_back(0x40);
  }
  writeVlq(track, 0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  writeU32(out, 6);
  writeU16(out, 0);  // format 0
  writeU16(out, 1);  // one track
  writeU16(out, TICKS_PER_QUARTER);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  writeU32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

std::vector<std::uint8_t> readFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void writeFileBytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace stt
