#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stt/generation.hpp"
#include "stt/metrics.hpp"
#include "stt/segmentation.hpp"
#include "stt/skeleton.hpp"
#include "stt/training.hpp"

namespace stt {

// One structured config for the whole pipeline. Unknown keys in the file are
// rejected; every field has the committed default and CLI flags override file
// values. The effective config is echoed into each run directory.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  GenConfig generate;

  std::string segmenter_kind = "external";  // external reads .labels sidecars
  HeuristicConfig heuristic;

  SkeletonConfig skeleton;
  bool remove_half = false;
  std::uint64_t remove_seed = 1;

  std::string data_dir;  // empty = synthesize into the run directory
  int synth_songs = 8;
  std::uint64_t synth_seed = 42;
  std::string synth_style = "pentatonic";
  double split_ratio = 0.9;
  std::uint64_t split_seed = 7;

  std::string tonic = "auto";  // "auto", "C".."B", or "0".."11"
  PscConfig psc;
  int prompt_bars = 2;

  int jobs = 0;  // 0 = library default thread count
};

RunConfig runConfigFromJson(const std::string& json_text);
std::string runConfigToJson(const RunConfig& cfg);

RunConfig loadRunConfig(const std::string& path);
void saveRunConfig(const RunConfig& cfg, const std::string& path);

// Resolves "auto" / note names / numbers; nullopt means auto-detect per song.
std::optional<int> tonicFromString(const std::string& name);

}  // namespace stt
