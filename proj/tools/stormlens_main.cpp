#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stormlens/error.hpp"
#include "stormlens/pipeline.hpp"

namespace {

constexpr const char* kFooter = R"(Config file (JSON):
  counts_file        n-gram daily counts TSV (ingest writes it, other commands read it)
  hurdat2_file       HURDAT2 best-track file
  impacts_file       impacts CSV: name,season,deaths,damage_usd,max_category
  tweets_file        raw tweets TSV for ingest: timestamp, lang, retweet flag, text
  output_dir         artifact directory (default "out")
  corpus             "organic" (default) or "all"
  language           language code (default "en")
  window_days        attention window length in days (default 365)
  study_window       [first_season, last_season] accepted in the impacts file
  storms, seasons    optional keep-lists applied before assembly
  decay              min_run_days (default 6), parameter bounds (p/r/q/alpha _lo/_hi),
                     grid_starts (5), random_starts (3), max_iterations (500)
  sampler            chains (8), draws (2000), burn_in (1000), seed,
                     max_tree_depth (10), target_accept (0.8)
  write_chain_draws  also write per-chain draw CSVs (default false)
  scale_max_degrees  envelope half-width cap in degrees (default 8)
  jobs               worker threads (default: logical cores)

Environment:
  STORMLENS_LOG      log verbosity: error, warn (default), info, or debug
)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stormlens: hurricane attention analytics from n-gram counts and best tracks"};
  app.require_subcommand(1);
  app.footer(kFooter);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> scale_max_degrees;

  const std::pair<const char*, const char*> commands[] = {
      {"ingest", "Tokenize raw tweets into the daily n-gram counts file"},
      {"metrics", "Write the per-storm attention summary CSV"},
      {"fit-decay", "Fit decay models to each storm's post-peak attention"},
      {"regress", "Sample the Bayesian impact regressions and write posterior CSVs"},
      {"map", "Write attention-envelope GeoJSON per season"},
      {"report", "Run metrics, fit-decay, regress, and map, plus radar and attention-share tables"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "JSON pipeline configuration file")->required();
    sub->add_option("--jobs", jobs, "Worker threads (default: logical cores)");
    sub->add_option("--seed", seed, "Sampler and fit seed; required for fit-decay, regress, and report "
                                    "unless the config sets sampler.seed");
    sub->add_option("--scale-max-degrees", scale_max_degrees,
                    "Envelope half-width cap in degrees (default 8)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = stormlens::pipeline::load_config(config_path);
    stormlens::pipeline::Overrides overrides;
    overrides.seed = seed;
    overrides.jobs = jobs;
    overrides.scale_max_degrees = scale_max_degrees;
    stormlens::pipeline::run_pipeline(std::move(config), app.get_subcommands().front()->get_name(),
                                      overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stormlens: %s\n", e.what());
    return 1;
  }
  return 0;
}
