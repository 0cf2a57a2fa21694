#include "stt/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stt/generation.hpp"

namespace stt {

namespace fs = std::filesystem;

std::string midiPath(const std::string& data_dir, const std::string& name) {
  return (fs::path(data_dir) / (name + ".mid")).string();
}
std::string labelsPath(const std::string& data_dir, const std::string& name) {
  return (fs::path(data_dir) / (name + ".labels")).string();
}
std::string skeletonPath(const std::string& data_dir, const std::string& name) {
  return (fs::path(data_dir) / (name + ".skeleton")).string();
}
std::string tokensPath(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / (name + ".tokens")).string();
}

namespace {

std::string songName(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "song_%03d", index);
  return buf;
}

std::string manifestPath(const std::string& data_dir) {
  return (fs::path(data_dir) / "manifest.txt").string();
}

// Stable per-song stream id so training and generation draw the same
// remove-half selection regardless of iteration order.
std::uint64_t songStream(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void synthesizeCorpus(const std::string& out_dir, int n_songs, std::uint64_t seed,
                      const std::string& style, double split_ratio, std::uint64_t split_seed) {
  CorpusStyle corpus_style;
  if (style == "pentatonic")
    corpus_style = CorpusStyle::Pentatonic;
  else if (style == "chromatic")
    corpus_style = CorpusStyle::Chromatic;
  else
    throw UsageError("unknown corpus style: " + style);

  fs::create_directories(out_dir);
  std::vector<SyntheticSong> songs = makeSyntheticCorpus(n_songs, seed, corpus_style);
  std::vector<CorpusItem> items;
  for (std::size_t i = 0; i < songs.size(); ++i) {
    std::string name = songName(static_cast<int>(i));
    std::vector<std::uint8_t> bytes = writeMidi(songs[i].melody);
    writeFileBytes(midiPath(out_dir, name), bytes);
    saveLabels(songs[i].phrase_labels, labelsPath(out_dir, name));
    items.push_back({name + ".mid", static_cast<int>(songs[i].melody.notes.size())});
  }
  saveManifest(splitCorpus(items, split_ratio, split_seed), manifestPath(out_dir));
}

IngestStats ingestCorpus(const std::string& in_dir, const std::string& out_dir,
                         double split_ratio, std::uint64_t seed) {
  if (!fs::is_directory(in_dir)) throw UsageError("not a directory: " + in_dir);
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".mid" || ext == ".midi") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) throw DataError("no .mid files in " + in_dir);

  fs::create_directories(out_dir);

  // Parsing is pure per file: parallel parse, then deterministic serial
  // output in sorted-path order.
  struct Parsed {
    std::optional<Melody> melody;
    bool filtered = false;
    std::string error;
  };
  std::vector<Parsed> parsed(inputs.size());
  long long file_count = static_cast<long long>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < file_count; ++i) {
    try {
      MidiParseResult result = parseMidi(readFileBytes(inputs[i].string()));
      if (std::holds_alternative<FilteredOut>(result))
        parsed[i].filtered = true;
      else
        parsed[i].melody = std::get<Melody>(std::move(result));
    } catch (const DataError& e) {
      parsed[i].error = e.what();
    }
  }

  IngestStats stats;
  std::vector<CorpusItem> items;
  int index = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!parsed[i].error.empty()) {
      std::cerr << "skipping " << inputs[i].string() << ": " << parsed[i].error << "\n";
      ++stats.failed;
      continue;
    }
    if (parsed[i].filtered) {
      ++stats.filtered;
      continue;
    }
    std::string name = songName(index++);
    writeFileBytes(midiPath(out_dir, name), writeMidi(*parsed[i].melody));
    items.push_back({name + ".mid", static_cast<int>(parsed[i].melody->notes.size())});
    ++stats.accepted;
  }
  if (items.empty()) throw DataError("no usable melodies in " + in_dir);
  saveManifest(splitCorpus(items, split_ratio, seed), manifestPath(out_dir));
  return stats;
}

std::vector<PipelineSong> loadSongs(const std::string& data_dir) {
  CorpusManifest manifest = loadManifest(manifestPath(data_dir));
  std::vector<PipelineSong> songs;
  for (const ManifestEntry& entry : manifest.entries) {
    PipelineSong song;
    song.midi_path = (fs::path(data_dir) / entry.path).string();
    song.name = fs::path(entry.path).stem().string();
    song.split = entry.split;
    song.melody = parseMelodyStrict(readFileBytes(song.midi_path));
    songs.push_back(std::move(song));
  }
  return songs;
}

PhraseLabels resolveLabels(const std::string& data_dir, const PipelineSong& song,
                           SegmenterKind kind, const HeuristicConfig& heuristic) {
  std::string sidecar = labelsPath(data_dir, song.name);
  if (kind == SegmenterKind::External) {
    if (!fs::exists(sidecar))
      throw DataError("external segmentation: missing sidecar " + sidecar);
    PhraseLabels labels = loadLabels(sidecar);
    return segment(song.melody, SegmenterKind::External, &labels, heuristic);
  }
  if (kind == SegmenterKind::Expansion && fs::exists(sidecar)) {
    PhraseLabels base = loadLabels(sidecar);
    return segment(song.melody, SegmenterKind::Expansion, &base, heuristic);
  }
  return segment(song.melody, kind, nullptr, heuristic);
}

void segmentCorpus(const std::string& data_dir, SegmenterKind kind,
                   const HeuristicConfig& heuristic) {
  for (const PipelineSong& song : loadSongs(data_dir)) {
    PhraseLabels labels = resolveLabels(data_dir, song, kind, heuristic);
    saveLabels(labels, labelsPath(data_dir, song.name));
  }
}

void skeletonCorpus(const std::string& data_dir, const RunConfig& cfg, SegmenterKind kind) {
  std::vector<PipelineSong> songs = loadSongs(data_dir);
  for (std::size_t i = 0; i < songs.size(); ++i) {
    PhraseLabels labels = resolveLabels(data_dir, songs[i], kind, cfg.heuristic);
    SkeletonAnnotation ann = extractSkeleton(songs[i].melody, labels, cfg.skeleton);
    if (cfg.remove_half)
      ann = removeFraction(ann, labels, 0.5, mixSeed(cfg.remove_seed, songStream(songs[i].name)));
    saveAnnotation(ann, skeletonPath(data_dir, songs[i].name));
  }
}

std::vector<TrainSample> buildSamples(const std::string& data_dir,
                                      const std::vector<PipelineSong>& songs, SegmenterKind kind,
                                      const RunConfig& cfg, bool remove_half) {
  std::vector<TrainSample> samples;
  for (std::size_t i = 0; i < songs.size(); ++i) {
    const PipelineSong& song = songs[i];
    PhraseLabels labels = resolveLabels(data_dir, song, kind, cfg.heuristic);
    SkeletonAnnotation ann = extractSkeleton(song.melody, labels, cfg.skeleton);
    if (remove_half)
      ann = removeFraction(ann, labels, 0.5, mixSeed(cfg.remove_seed, songStream(song.name)));
    TrainSample sample;
    sample.name = song.name;
    sample.full = encode(song.melody, labels);
    sample.skeleton = skeletonSequence(song.melody, labels, ann);
    samples.push_back(std::move(sample));
  }
  return samples;
}

AblationVariant ablationVariant(int group, SegmenterKind ours) {
  switch (group) {
    case 1: return {ours, false};
    case 2: return {SegmenterKind::NoSegment, false};
    case 3: return {SegmenterKind::TwoBars, false};
    case 4: return {SegmenterKind::Expansion, false};
    case 5: return {ours, true};
    case 6: return {SegmenterKind::NoSegment, true};
    case 7: return {SegmenterKind::TwoBars, true};
    case 8: return {SegmenterKind::Expansion, true};
    default: throw UsageError("ablation group must be 1-8");
  }
}

void trainRun(const RunConfig& cfg, const std::string& data_dir, const std::string& run_dir,
              SegmenterKind kind, bool remove_half) {
  fs::create_directories(run_dir);
  fs::create_directories(fs::path(run_dir) / "checkpoints");
  saveRunConfig(cfg, (fs::path(run_dir) / "config.json").string());

  std::vector<PipelineSong> songs = loadSongs(data_dir);
  std::vector<PipelineSong> train_songs;
  for (PipelineSong& s : songs)
    if (s.split == Split::Train) train_songs.push_back(std::move(s));
  if (train_songs.empty()) throw DataError("no train-split songs in " + data_dir);

  // A song that cannot be prepared is skipped with a warning, not fatal.
  std::vector<TrainSample> samples;
  int skipped = 0;
  for (std::size_t i = 0; i < train_songs.size(); ++i) {
    try {
      std::vector<TrainSample> one =
          buildSamples(data_dir, {train_songs[i]}, kind, cfg, remove_half);
      samples.push_back(std::move(one.front()));
    } catch (const DataError& e) {
      std::cerr << "skipping " << train_songs[i].name << ": " << e.what() << "\n";
      ++skipped;
    }
  }
  if (skipped > 0) std::cerr << skipped << " song(s) skipped\n";
  if (samples.empty()) throw DataError("no trainable songs in " + data_dir);

  ModelState state = ModelState::init(cfg.model, cfg.train.seed);
  AdamState adam = AdamState::init(state);

  std::ofstream loss_log((fs::path(run_dir) / "loss.log").string(), std::ios::binary);
  if (!loss_log) throw DataError("cannot write loss log in " + run_dir);

  TrainHooks hooks;
  hooks.on_step = [&loss_log](long step, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%ld\t%.6f\n", step, loss);
    loss_log << buf;
  };
  hooks.on_checkpoint = [&](long step, const ModelState& s, const AdamState& a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06ld.sttm", step);
    saveCheckpoint(trainerCheckpoint(cfg.model, s, a),
                   (fs::path(run_dir) / "checkpoints" / buf).string());
    saveCheckpoint(trainerCheckpoint(cfg.model, s, a),
                   (fs::path(run_dir) / "checkpoints" / "final.sttm").string());
  };
  train(samples, state, adam, cfg.model, cfg.train, hooks);
}

void generateRun(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& data_dir, const std::string& out_dir, SegmenterKind kind,
                 bool remove_half) {
  Checkpoint ckpt = loadCheckpoint(checkpoint_path);
  ModelState state = stateFromCheckpoint(ckpt);
  fs::create_directories(out_dir);
  saveRunConfig(cfg, (fs::path(out_dir) / "config.json").string());

  std::vector<PipelineSong> songs = loadSongs(data_dir);
  bool has_test = std::any_of(songs.begin(), songs.end(),
                              [](const PipelineSong& s) { return s.split == Split::Test; });

  // Assemble the per-song work serially (file I/O), generate in parallel
  // (workers share the read-only state), then write in order.
  struct Job {
    std::string name;
    TokenSequence skeleton, prompt;
    GenConfig gen;
    TimeSignature ts;
    GenerationResult result;
    std::exception_ptr error;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < songs.size(); ++i) {
    const PipelineSong& song = songs[i];
    if (has_test && song.split != Split::Test) continue;
    PhraseLabels labels = resolveLabels(data_dir, song, kind, cfg.heuristic);
    SkeletonAnnotation ann = extractSkeleton(song.melody, labels, cfg.skeleton);
    if (remove_half)
      ann = removeFraction(ann, labels, 0.5, mixSeed(cfg.remove_seed, songStream(song.name)));
    Job job;
    job.name = song.name;
    job.skeleton = skeletonSequence(song.melody, labels, ann);
    job.prompt = extractPrompt(song.melody, labels, cfg.prompt_bars);
    job.gen = cfg.generate;
    job.gen.seed = mixSeed(cfg.generate.seed, songStream(song.name));
    job.ts = song.melody.time_signature;
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw DataError("no songs to generate from " + data_dir);

  long long job_count = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < job_count; ++i) {
    try {
      jobs[i].result =
          generate(state, ckpt.config, jobs[i].skeleton, jobs[i].prompt, jobs[i].gen, jobs[i].ts);
    } catch (...) {
      jobs[i].error = std::current_exception();
    }
  }
  for (Job& job : jobs) {
    if (job.error) std::rethrow_exception(job.error);
    writeFileBytes(midiPath(out_dir, job.name), writeMidi(job.result.melody));
    saveTokens(job.result.tokens, tokensPath(out_dir, job.name));
  }
}

void evaluateRun(const RunConfig& cfg, const std::string& generated_dir,
                 const std::string& themes_dir, const std::string& report_path) {
  if (!fs::is_directory(generated_dir)) throw UsageError("not a directory: " + generated_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(generated_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".mid")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no generated .mid files in " + generated_dir);

  std::vector<std::pair<std::string, Melody>> songs;
  std::vector<Melody> themes;
  for (const fs::path& file : files) {
    std::string name = file.stem().string();
    songs.push_back({name, parseMelodyStrict(readFileBytes(file.string()))});
    std::string theme_file = midiPath(themes_dir, name);
    if (!fs::exists(theme_file))
      throw DataError("no theme " + theme_file + " for generated song " + name);
    themes.push_back(parseMelodyStrict(readFileBytes(theme_file)));
  }

  EvaluateOptions opts;
  opts.tonic = tonicFromString(cfg.tonic);
  opts.prompt_bars = cfg.prompt_bars;
  opts.psc = cfg.psc;
  MetricReport report = evaluateCorpus(songs, themes, opts);

  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + report_path);
  out << reportToTsv(report);
}

void ablateRun(const RunConfig& cfg, int group, const std::string& run_dir) {
  SegmenterKind ours = segmenterKindFromName(cfg.segmenter_kind);
  AblationVariant variant = ablationVariant(group, ours);

  fs::create_directories(run_dir);
  std::string data_dir = cfg.data_dir;
  if (data_dir.empty()) {
    data_dir = (fs::path(run_dir) / "data").string();
    synthesizeCorpus(data_dir, cfg.synth_songs, cfg.synth_seed, cfg.synth_style, cfg.split_ratio,
                     cfg.split_seed);
  }

  trainRun(cfg, data_dir, run_dir, variant.segmenter, variant.remove_half);
  generateRun(cfg, (fs::path(run_dir) / "checkpoints" / "final.sttm").string(), data_dir,
              (fs::path(run_dir) / "generated").string(), variant.segmenter, variant.remove_half);
  evaluateRun(cfg, (fs::path(run_dir) / "generated").string(), data_dir,
              (fs::path(run_dir) / "report.tsv").string());
}

}  // namespace stt
