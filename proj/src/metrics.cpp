#include "stt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace stt {

std::vector<std::uint8_t> onsetVector(const Melody& m, long from_tick, long to_tick) {
  if (to_tick <= from_tick) throw DataError("onset vector: empty tick range");
  std::size_t slots =
      static_cast<std::size_t>((to_tick - from_tick + ONSET_SLOT_TICKS - 1) / ONSET_SLOT_TICKS);
  std::vector<std::uint8_t> bits(slots, 0);
  for (const NoteEvent& n : m.notes) {
    if (n.onset < from_tick || n.onset >= to_tick) continue;
    bits[static_cast<std::size_t>((n.onset - from_tick) / ONSET_SLOT_TICKS)] = 1;
  }
  return bits;
}

long trc(const Melody& theme, const Melody& continuation, int exclude_prefix_slots) {
  if (theme.notes.empty() || continuation.notes.empty())
    throw DataError("TRC: empty melody");
  if (melodySpan(continuation) < melodySpan(theme))
    throw DataError("TRC: continuation is shorter than the theme");
  std::vector<std::uint8_t> r_theme = onsetVector(theme, 0, melodySpan(theme));
  std::vector<std::uint8_t> r_cont = onsetVector(continuation, 0, melodySpan(continuation));
  std::size_t len = r_theme.size();
  if (r_cont.size() < len) throw DataError("TRC: continuation is shorter than the theme");

  long best = -1;
  for (std::size_t start = static_cast<std::size_t>(std::max(exclude_prefix_slots, 0));
       start + len <= r_cont.size(); ++start) {
    long d = 0;
    for (std::size_t i = 0; i < len; ++i) d += r_theme[i] != r_cont[start + i];
    if (best < 0 || d < best) best = d;
  }
  if (best < 0) throw DataError("TRC: no candidate window after excluding the prompt region");
  return best;
}

long tpc(const Melody& theme, const Melody& continuation, int exclude_prefix_notes) {
  if (theme.notes.empty()) throw DataError("TPC: empty theme");
  std::size_t len = theme.notes.size();
  if (continuation.notes.size() < len)
    throw DataError("TPC: continuation has fewer notes than the theme");

  long best = -1;
  for (std::size_t start = static_cast<std::size_t>(std::max(exclude_prefix_notes, 0));
       start + len <= continuation.notes.size(); ++start) {
    long d = 0;
    for (std::size_t i = 0; i < len; ++i)
      d += theme.notes[i].pitch != continuation.notes[start + i].pitch;
    if (best < 0 || d < best) best = d;
  }
  if (best < 0) throw DataError("TPC: no candidate window after excluding the prompt region");
  return best;
}

double psc(const Melody& m, int tonic_pitch_class, const PscConfig& cfg) {
  if (m.notes.empty()) throw DataError("PSC: empty melody");
  static constexpr int PENTATONIC[] = {0, 2, 4, 7, 9};
  double total = 0.0;
  for (const NoteEvent& n : m.notes) {
    int degree = ((n.pitch - tonic_pitch_class) % 12 + 12) % 12;
    bool penta = std::find(std::begin(PENTATONIC), std::end(PENTATONIC), degree) !=
                 std::end(PENTATONIC);
    bool ornament = std::find(cfg.ornament_degrees.begin(), cfg.ornament_degrees.end(), degree) !=
                    cfg.ornament_degrees.end();
    total += penta ? 10.0 : (ornament ? 6.0 : -10.0);
  }
  return total / static_cast<double>(m.notes.size());
}

int detectTonic(const Melody& m) {
  if (m.notes.empty()) throw DataError("tonic detection: empty melody");
  long bar = barTicks(m.time_signature);
  long span = melodySpan(m);
  long final_bar_start = ((span - 1) / bar) * bar;
  int counts[12] = {0};
  for (const NoteEvent& n : m.notes)
    if (n.onset >= final_bar_start) ++counts[((n.pitch % 12) + 12) % 12];
  // The final bar always holds at least the last note's onset? Not when the
  // last note starts in an earlier bar and rings across; fall back to it.
  bool any = false;
  for (int c : counts) any = any || c > 0;
  if (!any) ++counts[m.notes.back().pitch % 12];
  int best = 0;
  for (int pc = 1; pc < 12; ++pc)
    if (counts[pc] > counts[best]) best = pc;
  return best;
}

namespace {

double entropyBits(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  if (total == 0) throw DataError("entropy of an empty distribution");
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

double pitchEntropy(const Melody& m) {
  if (m.notes.empty()) throw DataError("pitch entropy: empty melody");
  std::vector<long> counts(128, 0);
  for (const NoteEvent& n : m.notes) ++counts[static_cast<std::size_t>(n.pitch)];
  return entropyBits(counts);
}

double pitchClassEntropy(const Melody& m) {
  if (m.notes.empty()) throw DataError("pitch class entropy: empty melody");
  std::vector<long> counts(12, 0);
  for (const NoteEvent& n : m.notes) ++counts[static_cast<std::size_t>(n.pitch % 12)];
  return entropyBits(counts);
}

double grooveConsistency(const Melody& m) {
  if (m.notes.empty()) throw DataError("groove consistency: empty melody");
  long bar = barTicks(m.time_signature);
  long span = melodySpan(m);
  long n_bars = (span + bar - 1) / bar;
  if (n_bars < 2) throw DataError("groove consistency needs at least two bars");
  std::size_t slots_per_bar = static_cast<std::size_t>(bar / ONSET_SLOT_TICKS);

  double total = 0.0;
  for (long b = 0; b + 1 < n_bars; ++b) {
    std::vector<std::uint8_t> cur = onsetVector(m, b * bar, (b + 1) * bar);
    std::vector<std::uint8_t> next = onsetVector(m, (b + 1) * bar, (b + 2) * bar);
    cur.resize(slots_per_bar, 0);
    next.resize(slots_per_bar, 0);
    long d = 0;
    for (std::size_t i = 0; i < slots_per_bar; ++i) d += cur[i] != next[i];
    total += 1.0 - static_cast<double>(d) / static_cast<double>(slots_per_bar);
  }
  return total / static_cast<double>(n_bars - 1);
}

MetricReport evaluateCorpus(const std::vector<std::pair<std::string, Melody>>& songs,
                            const std::vector<Melody>& themes, const EvaluateOptions& opts) {
  if (songs.empty()) throw DataError("evaluate: no songs");
  if (themes.size() != songs.size())
    throw DataError("evaluate: " + std::to_string(themes.size()) + " themes for " +
                    std::to_string(songs.size()) + " songs");

  // Scoring is pure per song: parallel workers, results merged in input order.
  std::vector<SongMetrics> metrics(songs.size());
  std::vector<std::exception_ptr> errors(songs.size());
  long long count = static_cast<long long>(songs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      const Melody& song = songs[i].second;
      const Melody& theme_src = themes[i];

      long theme_ticks = static_cast<long>(opts.prompt_bars) * barTicks(theme_src.time_signature);
      Melody theme;
      theme.time_signature = theme_src.time_signature;
      for (const NoteEvent& n : theme_src.notes)
        if (n.onset < theme_ticks) theme.notes.push_back(n);
      if (theme.notes.empty())
        throw DataError("evaluate: theme for " + songs[i].first + " is empty");

      SongMetrics sm;
      int exclude_slots =
          static_cast<int>((theme_ticks + ONSET_SLOT_TICKS - 1) / ONSET_SLOT_TICKS);
      int exclude_notes = 0;
      for (const NoteEvent& n : song.notes)
        if (n.onset < theme_ticks) ++exclude_notes;
      sm.trc = static_cast<double>(trc(theme, song, exclude_slots));
      sm.tpc = static_cast<double>(tpc(theme, song, exclude_notes));
      sm.rc = grooveConsistency(song);
      int tonic = opts.tonic ? *opts.tonic : detectTonic(song);
      sm.psc = psc(song, tonic, opts.psc);
      sm.pce = pitchClassEntropy(song);
      sm.pe = pitchEntropy(song);
      metrics[i] = sm;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  MetricReport report;
  SongMetrics sum;
  for (std::size_t i = 0; i < songs.size(); ++i) {
    const SongMetrics& sm = metrics[i];
    sum.tpc += sm.tpc;
    sum.trc += sm.trc;
    sum.rc += sm.rc;
    sum.psc += sm.psc;
    sum.pce += sm.pce;
    sum.pe += sm.pe;
    report.rows.push_back({songs[i].first, sm});
  }
  double inv = 1.0 / static_cast<double>(songs.size());
  report.mean = {sum.tpc * inv, sum.trc * inv, sum.rc * inv,
                 sum.psc * inv, sum.pce * inv, sum.pe * inv};
  return report;
}

namespace {

std::string formatRow(const std::string& name, const SongMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s\t%.2f\t%.2f\t%.1f%%\t%.2f\t%.2f\t%.2f", name.c_str(), m.tpc,
                m.trc, m.rc * 100.0, m.psc, m.pce, m.pe);
  return buf;
}

}  // namespace

std::string reportToTsv(const MetricReport& report) {
  std::ostringstream out;
  out << "song\tTPC\tTRC\tRC\tPSC\tPCE\tPE\n";
  for (const auto& [name, m] : report.rows) out << formatRow(name, m) << "\n";
  out << formatRow("MEAN", report.mean) << "\n";
  return out.str();
}

}  // namespace stt
