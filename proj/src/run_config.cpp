#include "stt/run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stt {

namespace {

using nlohmann::json;

// Shortest decimal that round-trips the float, so emitted configs read
// "0.1" rather than the promoted-double artifact.
double jnum(float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::stod(std::string(buf, p));
}

void rejectUnknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw UsageError("config: unknown key '" + where + it.key() + "'");
}

template <class T>
void get(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parseModel(const json& j, ModelConfig& m) {
  rejectUnknown(j,
                {"d_model", "n_layers_encoder", "n_layers_decoder", "n_heads", "ffn_width",
                 "max_relative_distance", "max_segments", "dropout", "scale_by_d_model"},
                "model.");
  get(j, "d_model", m.d_model);
  get(j, "n_layers_encoder", m.n_layers_encoder);
  get(j, "n_layers_decoder", m.n_layers_decoder);
  get(j, "n_heads", m.n_heads);
  get(j, "ffn_width", m.ffn_width);
  get(j, "max_relative_distance", m.max_relative_distance);
  get(j, "max_segments", m.max_segments);
  get(j, "dropout", m.dropout);
  get(j, "scale_by_d_model", m.scale_by_d_model);
}

void parseTrain(const json& j, TrainConfig& t) {
  rejectUnknown(j,
                {"learning_rate", "batch_size", "adam_beta1", "adam_beta2", "adam_epsilon",
                 "max_steps", "checkpoint_interval", "seed", "max_sequence_length"},
                "train.");
  get(j, "learning_rate", t.learning_rate);
  get(j, "batch_size", t.batch_size);
  get(j, "adam_beta1", t.adam_beta1);
  get(j, "adam_beta2", t.adam_beta2);
  get(j, "adam_epsilon", t.adam_epsilon);
  get(j, "max_steps", t.max_steps);
  get(j, "checkpoint_interval", t.checkpoint_interval);
  get(j, "seed", t.seed);
  get(j, "max_sequence_length", t.max_sequence_length);
}

void parseGenerate(const json& j, GenConfig& g) {
  rejectUnknown(j, {"temperature", "top_k", "max_tokens", "seed", "greedy"}, "generate.");
  get(j, "temperature", g.temperature);
  get(j, "top_k", g.top_k);
  get(j, "max_tokens", g.max_tokens);
  get(j, "seed", g.seed);
  get(j, "greedy", g.greedy);
}

}  // namespace

namespace {

RunConfig runConfigFromJsonChecked(const std::string& json_text) {
  json j = json::parse(json_text);
  RunConfig cfg;
  rejectUnknown(
      j, {"model", "train", "generate", "segmenter", "skeleton", "data", "metrics", "jobs"}, "");
  if (j.contains("model")) parseModel(j.at("model"), cfg.model);
  if (j.contains("train")) parseTrain(j.at("train"), cfg.train);
  if (j.contains("generate")) parseGenerate(j.at("generate"), cfg.generate);
  if (j.contains("segmenter")) {
    const json& s = j.at("segmenter");
    rejectUnknown(
        s, {"kind", "rest_beats", "long_note_beats", "long_note_min_notes", "min_phrase_notes"},
        "segmenter.");
    get(s, "kind", cfg.segmenter_kind);
    segmenterKindFromName(cfg.segmenter_kind);  // validate early
    get(s, "rest_beats", cfg.heuristic.rest_beats);
    get(s, "long_note_beats", cfg.heuristic.long_note_beats);
    get(s, "long_note_min_notes", cfg.heuristic.long_note_min_notes);
    get(s, "min_phrase_notes", cfg.heuristic.min_phrase_notes);
  }
  if (j.contains("skeleton")) {
    const json& s = j.at("skeleton");
    rejectUnknown(s, {"long_note_beats", "trembling_max_between", "remove_half", "remove_seed"},
                  "skeleton.");
    get(s, "long_note_beats", cfg.skeleton.long_note_beats);
    get(s, "trembling_max_between", cfg.skeleton.trembling_max_between);
    get(s, "remove_half", cfg.remove_half);
    get(s, "remove_seed", cfg.remove_seed);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    rejectUnknown(d, {"dir", "synth_songs", "synth_seed", "synth_style", "split_ratio", "split_seed"},
                  "data.");
    get(d, "dir", cfg.data_dir);
    get(d, "synth_songs", cfg.synth_songs);
    get(d, "synth_seed", cfg.synth_seed);
    get(d, "synth_style", cfg.synth_style);
    get(d, "split_ratio", cfg.split_ratio);
    get(d, "split_seed", cfg.split_seed);
  }
  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    rejectUnknown(m, {"tonic", "ornament_degrees", "prompt_bars"}, "metrics.");
    get(m, "tonic", cfg.tonic);
    tonicFromString(cfg.tonic);  // validate early
    if (m.contains("ornament_degrees"))
      cfg.psc.ornament_degrees = m.at("ornament_degrees").get<std::vector<int>>();
    get(m, "prompt_bars", cfg.prompt_bars);
  }
  get(j, "jobs", cfg.jobs);
  return cfg;
}

}  // namespace

RunConfig runConfigFromJson(const std::string& json_text) {
  try {
    return runConfigFromJsonChecked(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

std::string runConfigToJson(const RunConfig& cfg) {
  json j;
  j["model"] = {{"d_model", cfg.model.d_model},
                {"n_layers_encoder", cfg.model.n_layers_encoder},
                {"n_layers_decoder", cfg.model.n_layers_decoder},
                {"n_heads", cfg.model.n_heads},
                {"ffn_width", cfg.model.ffn_width},
                {"max_relative_distance", cfg.model.max_relative_distance},
                {"max_segments", cfg.model.max_segments},
                {"dropout", jnum(cfg.model.dropout)},
                {"scale_by_d_model", cfg.model.scale_by_d_model}};
  j["train"] = {{"learning_rate", jnum(cfg.train.learning_rate)},
                {"batch_size", cfg.train.batch_size},
                {"adam_beta1", jnum(cfg.train.adam_beta1)},
                {"adam_beta2", jnum(cfg.train.adam_beta2)},
                {"adam_epsilon", jnum(cfg.train.adam_epsilon)},
                {"max_steps", cfg.train.max_steps},
                {"checkpoint_interval", cfg.train.checkpoint_interval},
                {"seed", cfg.train.seed},
                {"max_sequence_length", cfg.train.max_sequence_length}};
  j["generate"] = {{"temperature", jnum(cfg.generate.temperature)},
                   {"top_k", cfg.generate.top_k},
                   {"max_tokens", cfg.generate.max_tokens},
                   {"seed", cfg.generate.seed},
                   {"greedy", cfg.generate.greedy}};
  j["segmenter"] = {{"kind", cfg.segmenter_kind},
                    {"rest_beats", cfg.heuristic.rest_beats},
                    {"long_note_beats", cfg.heuristic.long_note_beats},
                    {"long_note_min_notes", cfg.heuristic.long_note_min_notes},
                    {"min_phrase_notes", cfg.heuristic.min_phrase_notes}};
  j["skeleton"] = {{"long_note_beats", cfg.skeleton.long_note_beats},
                   {"trembling_max_between", cfg.skeleton.trembling_max_between},
                   {"remove_half", cfg.remove_half},
                   {"remove_seed", cfg.remove_seed}};
  j["data"] = {{"dir", cfg.data_dir},          {"synth_songs", cfg.synth_songs},
               {"synth_seed", cfg.synth_seed}, {"synth_style", cfg.synth_style},
               {"split_ratio", cfg.split_ratio}, {"split_seed", cfg.split_seed}};
  j["metrics"] = {{"tonic", cfg.tonic},
                  {"ornament_degrees", cfg.psc.ornament_degrees},
                  {"prompt_bars", cfg.prompt_bars}};
  j["jobs"] = cfg.jobs;
  return j.dump(2) + "\n";
}

RunConfig loadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return runConfigFromJson(buf.str());
}

void saveRunConfig(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config: " + path);
  out << runConfigToJson(cfg);
}

std::optional<int> tonicFromString(const std::string& name) {
  if (name == "auto") return std::nullopt;
  static const std::pair<const char*, int> NAMES[] = {
      {"C", 0}, {"C#", 1}, {"Db", 1}, {"D", 2},  {"D#", 3}, {"Eb", 3}, {"E", 4},  {"F", 5},
      {"F#", 6}, {"Gb", 6}, {"G", 7},  {"G#", 8}, {"Ab", 8}, {"A", 9},  {"A#", 10}, {"Bb", 10},
      {"B", 11}};
  for (const auto& [n, pc] : NAMES)
    if (name == n) return pc;
  try {
    int pc = std::stoi(name);
    if (pc >= 0 && pc < 12) return pc;
  } catch (const std::exception&) {
  }
  throw UsageError("bad tonic '" + name + "' (use auto, a note name, or 0-11)");
}

}  // namespace stt
