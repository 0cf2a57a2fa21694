#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "stt/corpus.hpp"
#include "stt/midi.hpp"
#include "stt/segmentation.hpp"

namespace testutil {

// Random valid melody: quantized onsets/durations, optional rests, sorted and
// non-overlapping. Durations stay within the token vocabulary by default.
inline stt::Melody randomMelody(stt::Rng& rng, int min_notes = 1, int max_notes = 40,
                                bool allow_gaps = true, long max_duration = 3840) {
  stt::Melody m;
  int den4_numerators[] = {2, 3, 4};
  m.time_signature = {den4_numerators[rng.uniformInt(3)], 4};
  int count = min_notes + static_cast<int>(rng.uniformInt(
                              static_cast<std::uint32_t>(max_notes - min_notes + 1)));
  long onset = static_cast<long>(rng.uniformInt(4)) * 60;
  for (int i = 0; i < count; ++i) {
    long duration = (1 + static_cast<long>(rng.uniformInt(
                            static_cast<std::uint32_t>(max_duration / 60)))) *
                    60;
    m.notes.push_back({static_cast<int>(rng.uniformInt(128)), onset, duration});
    onset += duration;
    if (allow_gaps && rng.uniformInt(4) == 0) onset += (1 + rng.uniformInt(16)) * 60L;
  }
  return m;
}

// Random valid phrase labels for n notes.
inline stt::PhraseLabels randomLabels(stt::Rng& rng, std::size_t n, int max_phrases = 6) {
  stt::PhraseLabels labels(n);
  int label = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && label < max_phrases && rng.uniformInt(4) == 0) ++label;
    labels[i] = label;
  }
  return labels;
}

// Minimal raw SMF builder for parser tests.
class SmfBuilder {
 public:
  explicit SmfBuilder(int division) : division_(division) { tracks_.emplace_back(); }

  void newTrack() { tracks_.emplace_back(); }

  void noteOn(long tick, int pitch, int velocity = 64) {
    event(tick, {0x90, static_cast<std::uint8_t>(pitch), static_cast<std::uint8_t>(velocity)});
  }
  void noteOff(long tick, int pitch) {
    event(tick, {0x80, static_cast<std::uint8_t>(pitch), 0x40});
  }
  void timeSignature(long tick, int numerator, int den_power) {
    event(tick, {0xFF, 0x58, 0x04, static_cast<std::uint8_t>(numerator),
                 static_cast<std::uint8_t>(den_power), 0x18, 0x08});
  }

  std::vector<std::uint8_t> bytes(int format = 0) const {
    std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6};
    push16(out, format);
    push16(out, static_cast<int>(tracks_.size()));
    push16(out, division_);
    for (const auto& track : tracks_) {
      std::vector<Event> ordered = track;
      std::stable_sort(ordered.begin(), ordered.end(),
                       [](const Event& a, const Event& b) { return a.first < b.first; });
      std::vector<std::uint8_t> body;
      long cursor = 0;
      for (const auto& [tick, data] : ordered) {
        pushVlq(body, tick - cursor);
        cursor = tick;
        body.insert(body.end(), data.begin(), data.end());
      }
      pushVlq(body, 0);
      body.insert(body.end(), {0xFF, 0x2F, 0x00});
      out.insert(out.end(), {'M', 'T', 'r', 'k'});
      push32(out, static_cast<long>(body.size()));
      out.insert(out.end(), body.begin(), body.end());
    }
    return out;
  }

 private:
  using Event = std::pair<long, std::vector<std::uint8_t>>;

  void event(long tick, std::vector<std::uint8_t> data) {
    tracks_.back().push_back({tick, std::move(data)});
  }
  static void push16(std::vector<std::uint8_t>& out, int v) {
    out.push_back((v >> 8) & 0xFF);
    out.push_back(v & 0xFF);
  }
  static void push32(std::vector<std::uint8_t>& out, long v) {
    for (int i = 3; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xFF);
  }
  static void pushVlq(std::vector<std::uint8_t>& out, long v) {
    std::uint8_t buf[5];
    int n = 0;
    do {
      buf[n++] = v & 0x7F;
      v >>= 7;
    } while (v > 0);
    for (int i = n - 1; i >= 0; --i) out.push_back(buf[i] | (i > 0 ? 0x80 : 0x00));
  }

  int division_;
  std::vector<std::vector<Event>> tracks_;
};

}  // namespace testutil
