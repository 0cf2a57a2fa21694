#include "stt/representation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stt {

int Vocabulary::pitchId(int midi_pitch) {
  if (midi_pitch < 0 || midi_pitch > 127)
    throw DataError("pitch " + std::to_string(midi_pitch) + " outside MIDI range");
  return NUM_SPECIALS + midi_pitch;
}

long Vocabulary::durationId(long ticks) {
  if (ticks < QUANT_STEP || ticks % QUANT_STEP != 0)
    throw DataError("duration " + std::to_string(ticks) + " not on the 60-tick grid");
  if (ticks > MAX_DURATION_TICKS) ticks = MAX_DURATION_TICKS;
  return NUM_SPECIALS + ticks / QUANT_STEP - 1;
}

int Vocabulary::midiPitch(int id) {
  if (id < NUM_SPECIALS || id >= PITCH_VOCAB)
    throw DataError("pitch id " + std::to_string(id) + " does not decode to a MIDI pitch");
  return id - NUM_SPECIALS;
}

long Vocabulary::durationTicks(int id) {
  if (id < NUM_SPECIALS || id >= DURATION_VOCAB)
    throw DataError("duration id " + std::to_string(id) + " does not decode to ticks");
  return static_cast<long>(id - NUM_SPECIALS + 1) * QUANT_STEP;
}

const char* Vocabulary::specialName(int id) {
  switch (id) {
    case PAD: return "PAD";
    case BOS: return "BOS";
    case EOS: return "EOS";
    case PHRASE_END: return "PHRASE_END";
    default: throw DataError("id " + std::to_string(id) + " is not a special token");
  }
}

std::vector<int> TokenSequence::pitchIds() const {
  std::vector<int> out(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) out[i] = triplets[i].pitch;
  return out;
}

std::vector<int> TokenSequence::durationIds() const {
  std::vector<int> out(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) out[i] = triplets[i].duration;
  return out;
}

std::vector<int> TokenSequence::segments() const {
  std::vector<int> out(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) out[i] = triplets[i].segment;
  return out;
}

TokenSequence encode(const Melody& melody, const std::vector<int>& labels) {
  if (labels.size() != melody.notes.size())
    throw DataError("phrase labels (" + std::to_string(labels.size()) + ") do not match notes (" +
                    std::to_string(melody.notes.size()) + ")");
  if (melody.notes.empty()) throw DataError("cannot encode an empty melody");

  TokenSequence seq;
  seq.kind = SequenceKind::Full;
  seq.triplets.push_back({Vocabulary::BOS, Vocabulary::BOS, 1});
  for (std::size_t i = 0; i < melody.notes.size(); ++i) {
    const NoteEvent& n = melody.notes[i];
    seq.triplets.push_back({Vocabulary::pitchId(n.pitch),
                            static_cast<int>(Vocabulary::durationId(n.duration)), labels[i]});
    bool phrase_closes = i + 1 < labels.size() && labels[i + 1] != labels[i];
    if (phrase_closes)
      seq.triplets.push_back({Vocabulary::PHRASE_END, Vocabulary::PHRASE_END, labels[i]});
  }
  seq.triplets.push_back({Vocabulary::EOS, Vocabulary::EOS, labels.back()});
  return seq;
}

void validateSequence(const TokenSequence& tokens) {
  const auto& t = tokens.triplets;
  auto fail = [](std::size_t index, const std::string& what) {
    throw DataError("token " + std::to_string(index) + ": " + what);
  };
  if (t.size() < 3) throw DataError("token sequence too short (need BOS, a note, EOS)");
  if (t.front().pitch != Vocabulary::BOS || t.front().duration != Vocabulary::BOS)
    fail(0, "sequence must begin with BOS");
  if (t.front().segment != 1) fail(0, "BOS must carry segment 1");
  if (t.back().pitch != Vocabulary::EOS || t.back().duration != Vocabulary::EOS)
    fail(t.size() - 1, "sequence must end with EOS");

  // Segment automaton: each PHRASE_END closes the current segment (possibly
  // an empty one produced during generation) and advances the counter by
  // exactly one; notes and EOS must carry the running segment.
  int segment = 1;
  bool pending_phrase_end = false;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const NoteTriplet& tok = t[i];
    bool p_special = Vocabulary::isSpecial(tok.pitch);
    bool d_special = Vocabulary::isSpecial(tok.duration);
    if (p_special != d_special) fail(i, "pitch/duration specials must pair up");
    if (p_special) {
      if (tok.pitch != Vocabulary::PHRASE_END || tok.duration != Vocabulary::PHRASE_END)
        fail(i, "only PHRASE_END may appear inside the body");
      if (pending_phrase_end) segment += 1;  // the closed phrase stayed empty
      if (tok.segment != segment) fail(i, "PHRASE_END must carry the closing phrase's segment");
      pending_phrase_end = true;
      continue;
    }
    if (pending_phrase_end) {
      segment += 1;
      pending_phrase_end = false;
    }
    if (tok.segment != segment)
      fail(i, tok.segment == segment + 1 ? "segment advanced without PHRASE_END"
                                         : "segment ids must advance in steps of 1");
  }
  if (pending_phrase_end) segment += 1;  // trailing empty phrase
  if (t.back().segment != segment) fail(t.size() - 1, "EOS must carry the last segment id");
}

Melody decode(const TokenSequence& tokens, TimeSignature ts) {
  validateSequence(tokens);
  Melody m;
  m.time_signature = ts;
  long onset = 0;
  for (std::size_t i = 1; i + 1 < tokens.triplets.size(); ++i) {
    const NoteTriplet& tok = tokens.triplets[i];
    if (Vocabulary::isSpecial(tok.pitch)) continue;
    long dur = Vocabulary::durationTicks(tok.duration);
    m.notes.push_back({Vocabulary::midiPitch(tok.pitch), onset, dur});
    onset += dur;
  }
  if (m.notes.empty()) throw DataError("token sequence decodes to an empty melody");
  return m;
}

namespace {

std::string fieldToText(int id, bool pitch_field) {
  if (Vocabulary::isSpecial(id)) return Vocabulary::specialName(id);
  return pitch_field ? std::to_string(Vocabulary::midiPitch(id))
                     : std::to_string(Vocabulary::durationTicks(id));
}

int fieldFromText(const std::string& s, bool pitch_field, std::size_t index) {
  for (int id = 0; id < Vocabulary::NUM_SPECIALS; ++id)
    if (s == Vocabulary::specialName(id)) return id;
  try {
    long v = std::stol(s);
    return pitch_field ? Vocabulary::pitchId(static_cast<int>(v))
                       : static_cast<int>(Vocabulary::durationId(v));
  } catch (const std::exception&) {
    throw DataError("token " + std::to_string(index) + ": bad field '" + s + "'");
  }
}

}  // namespace

std::string tokensToText(const TokenSequence& tokens) {
  std::ostringstream out;
  for (std::size_t i = 0; i < tokens.triplets.size(); ++i) {
    const NoteTriplet& t = tokens.triplets[i];
    if (i) out << ' ';
    out << fieldToText(t.pitch, true) << ':' << fieldToText(t.duration, false) << ':' << t.segment;
  }
  return out.str();
}

TokenSequence tokensFromText(std::string_view line, SequenceKind kind) {
  TokenSequence seq;
  seq.kind = kind;
  std::istringstream in{std::string(line)};
  std::string word;
  std::size_t index = 0;
  while (in >> word) {
    std::size_t c1 = word.find(':');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : word.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw DataError("token " + std::to_string(index) + ": expected pitch:duration:segment");
    NoteTriplet t;
    t.pitch = fieldFromText(word.substr(0, c1), true, index);
    t.duration = fieldFromText(word.substr(c1 + 1, c2 - c1 - 1), false, index);
    t.segment = std::stoi(word.substr(c2 + 1));
    seq.triplets.push_back(t);
    ++index;
  }
  return seq;
}

void saveTokens(const TokenSequence& tokens, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write tokens: " + path);
  out << tokensToText(tokens) << "\n";
}

TokenSequence loadTokens(const std::string& path, SequenceKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tokens: " + path);
  std::string line;
  std::getline(in, line);
  return tokensFromText(line, kind);
}

void saveTokenCorpus(const std::vector<TokenSequence>& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write token corpus: " + path);
  for (const TokenSequence& tokens : corpus) out << tokensToText(tokens) << "\n";
}

std::vector<TokenSequence> loadTokenCorpus(const std::string& path, SequenceKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open token corpus: " + path);
  std::vector<TokenSequence> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    corpus.push_back(tokensFromText(line, kind));
  }
  return corpus;
}

}  // namespace stt
