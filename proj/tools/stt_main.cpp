// Command-line surface for the pipeline: ingest, synth, segment, skeleton,
// train, generate, evaluate, ablate, bench-info.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "stt/kernels.hpp"
#include "stt/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  int jobs = 0;
};

stt::RunConfig effectiveConfig(const CommonFlags& flags) {
  stt::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = stt::loadRunConfig(flags.config_path);
  if (flags.jobs > 0) cfg.jobs = flags.jobs;
  if (cfg.jobs > 0) stt::kernels::setThreads(cfg.jobs);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small Tunes pipeline: skeleton-conditioned melody generation"};
  app.require_subcommand(1);

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file (defaults in configs/default.json)");
  app.add_option("--jobs", flags.jobs, "cap kernel worker threads");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse a directory of MIDI files into a data dir");
  std::string ingest_in, ingest_out = "data";
  double ingest_ratio = 0.9;
  std::uint64_t ingest_seed = 7;
  ingest->add_option("dir", ingest_in, "input directory of .mid files")->required();
  ingest->add_option("--out", ingest_out, "output data directory");
  ingest->add_option("--ratio", ingest_ratio, "train split fraction");
  ingest->add_option("--seed", ingest_seed, "split shuffle seed");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  int synth_songs = 8;
  std::uint64_t synth_seed = 42;
  std::string synth_style = "pentatonic";
  std::string synth_out = "data";
  double synth_ratio = 0.9;
  std::uint64_t synth_split_seed = 7;
  synth->add_option("--songs", synth_songs, "number of songs");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--style", synth_style, "pentatonic or chromatic");
  synth->add_option("--out", synth_out, "output data directory");
  synth->add_option("--ratio", synth_ratio, "train split fraction");
  synth->add_option("--split-seed", synth_split_seed, "split shuffle seed");

  // segment
  auto* segment_cmd = app.add_subcommand("segment", "write phrase-label sidecars");
  std::string segment_kind = "heuristic", segment_data = "data";
  segment_cmd->add_option("--kind", segment_kind,
                          "external | heuristic | nosegment | twobars | expansion");
  segment_cmd->add_option("--data", segment_data, "data directory");

  // skeleton
  auto* skeleton_cmd = app.add_subcommand("skeleton", "write skeleton-annotation sidecars");
  std::string skeleton_data = "data", skeleton_segmenter = "external";
  bool remove_half = false;
  std::uint64_t remove_seed_flag = 0;
  skeleton_cmd->add_option("--data", skeleton_data, "data directory");
  skeleton_cmd->add_option("--segmenter", skeleton_segmenter, "segmenter for phrase labels");
  skeleton_cmd->add_flag("--remove-half", remove_half, "randomly drop half per phrase");
  skeleton_cmd->add_option("--seed", remove_seed_flag, "removal seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train on the train split of a data dir");
  std::string train_data = "data", train_out = "run";
  train_cmd->add_option("--data", train_data, "data directory");
  train_cmd->add_option("--out", train_out, "run directory (checkpoints, loss log)");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "generate melodies from a checkpoint");
  std::string gen_ckpt, gen_data = "data", gen_out = "generated";
  int gen_prompt_bars = 0;
  bool gen_greedy = false;
  gen_cmd->add_option("--checkpoint", gen_ckpt, "checkpoint file")->required();
  gen_cmd->add_option("--data", gen_data, "data directory (prompts and skeletons)");
  gen_cmd->add_option("--out", gen_out, "output directory");
  gen_cmd->add_option("--prompt-bars", gen_prompt_bars, "prompt length in bars");
  gen_cmd->add_flag("--greedy", gen_greedy, "argmax decoding");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "compute the objective metrics");
  std::string eval_in = "generated", eval_themes = "data", eval_report = "report.tsv";
  eval_cmd->add_option("--in", eval_in, "directory of melodies to score");
  eval_cmd->add_option("--themes", eval_themes, "directory of theme (reference) songs");
  eval_cmd->add_option("--out", eval_report, "report path");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "train+generate+evaluate one ablation group");
  int ablate_group = 1;
  std::string ablate_out = "run";
  ablate_cmd->add_option("--group", ablate_group, "ablation group 1-8")->required();
  ablate_cmd->add_option("--out", ablate_out, "run directory");

  // bench-info
  auto* info_cmd = app.add_subcommand("bench-info", "print kernel backend information");

  app.footer(
      "Exit codes: 0 success, 1 usage error, 2 data error, 3 contract violation.\n"
      "Flags override values from --config; defaults live in configs/default.json.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1, --help stays 0
  }

  try {
    stt::RunConfig cfg = effectiveConfig(flags);

    if (*ingest) {
      stt::IngestStats stats = stt::ingestCorpus(ingest_in, ingest_out, ingest_ratio, ingest_seed);
      std::cout << "accepted " << stats.accepted << ", filtered " << stats.filtered << ", failed "
                << stats.failed << "\n";
    } else if (*synth) {
      stt::synthesizeCorpus(synth_out, synth_songs, synth_seed, synth_style, synth_ratio,
                            synth_split_seed);
      std::cout << "wrote " << synth_songs << " songs to " << synth_out << "\n";
    } else if (*segment_cmd) {
      stt::segmentCorpus(segment_data, stt::segmenterKindFromName(segment_kind), cfg.heuristic);
      std::cout << "labeled " << segment_data << " with " << segment_kind << "\n";
    } else if (*skeleton_cmd) {
      if (remove_half) cfg.remove_half = true;
      if (remove_seed_flag) cfg.remove_seed = remove_seed_flag;
      stt::skeletonCorpus(skeleton_data, cfg, stt::segmenterKindFromName(skeleton_segmenter));
      std::cout << "annotated " << skeleton_data << (cfg.remove_half ? " (remove 50%)" : "")
                << "\n";
    } else if (*train_cmd) {
      stt::trainRun(cfg, train_data, train_out, stt::segmenterKindFromName(cfg.segmenter_kind),
                    cfg.remove_half);
      std::cout << "trained into " << train_out << "\n";
    } else if (*gen_cmd) {
      if (gen_prompt_bars > 0) cfg.prompt_bars = gen_prompt_bars;
      if (gen_greedy) cfg.generate.greedy = true;
      stt::generateRun(cfg, gen_ckpt, gen_data, gen_out,
                       stt::segmenterKindFromName(cfg.segmenter_kind), cfg.remove_half);
      std::cout << "generated into " << gen_out << "\n";
    } else if (*eval_cmd) {
      stt::evaluateRun(cfg, eval_in, eval_themes, eval_report);
      std::cout << "report written to " << eval_report << "\n";
    } else if (*ablate_cmd) {
      stt::ablateRun(cfg, ablate_group, ablate_out);
      std::cout << "ablation group " << ablate_group << " complete in " << ablate_out << "\n";
    } else if (*info_cmd) {
      std::cout << "openmp " << (stt::kernels::openmpAvailable() ? "yes" : "no") << ", max threads "
                << stt::kernels::maxThreads() << "\n";
    }
  } catch (const stt::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const stt::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const stt::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
