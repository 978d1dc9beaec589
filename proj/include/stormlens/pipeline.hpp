#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stormlens/bayes.hpp"
#include "stormlens/corpus.hpp"
#include "stormlens/decay.hpp"
#include "stormlens/dossier.hpp"

namespace stormlens::pipeline {

/// Everything a pipeline run needs, read from a JSON config file. Paths are
/// resolved relative to the process working directory; inputs are checked
/// for existence when the selected command needs them.
struct PipelineConfig {
  std::string counts_file;
  std::string hurdat2_file;
  std::string impacts_file;
  std::string tweets_file;  // ingest input
  std::string output_dir = "out";

  corpus::CorpusKind corpus_kind = corpus::CorpusKind::organic;
  std::string language = "en";
  int window_days = 365;
  std::optional<dossier::StudyWindow> study_window;
  std::vector<std::string> storms;  // keep only these names (case-insensitive); empty keeps all
  std::vector<int> seasons;         // keep only these seasons; empty keeps all

  int decay_min_run_days = 6;
  decay::FitConfig decay_fit;

  bayes::NutsConfig sampler;
  bool seed_set = false;  // a seed appeared in config or on the command line
  bool write_chain_draws = false;

  double scale_max_degrees = 8.0;
  int jobs = 0;  // 0 = logical cores
};

PipelineConfig load_config(const std::string& path);

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> scale_max_degrees;
};

/// Runs one command: ingest, metrics, fit-decay, regress, map, or report.
/// Artifacts land in config.output_dir (the counts file for ingest), each
/// written atomically. Throws Error with a structured message on any
/// failure; module errors pass through unchanged.
void run_pipeline(PipelineConfig config, const std::string& command, const Overrides& overrides = {});

}  // namespace stormlens::pipeline
