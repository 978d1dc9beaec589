#include "stormlens/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>
#include <utility>

#include <json.hpp>

#include "stormlens/calendar.hpp"
#include "stormlens/error.hpp"
#include "stormlens/hurdat2.hpp"
#include "stormlens/log.hpp"
#include "stormlens/mapgen.hpp"
#include "stormlens/metrics.hpp"

namespace stormlens::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

void require_input(const std::string& path, std::string_view key) {
  if (path.empty()) throw Error::at("config does not set {}", key);
  if (!fs::exists(path)) throw Error::at("{} does not exist: {}", key, path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::at("cannot open {}", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::at("cannot write {}", tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error::at("short write to {}", tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error::at("cannot move {} into place: {}", path.string(), ec.message());
}

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw Error::at("unknown key \"{}\" in {}", item.key(), where);
  }
}

/// Runs fn(0..n-1) on up to `jobs` threads, round-robin. Callers write
/// results into preallocated slots indexed by i, so output order never
/// depends on scheduling.
template <typename Fn>
void for_each_indexed(std::size_t n, int jobs, Fn&& fn) {
  if (n == 0) return;
  int workers = std::clamp(jobs, 1, static_cast<int>(n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(workers)) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Assembled {
  std::vector<dossier::StormDossier> dossiers;
  dossier::SeriesStore store;
};

Assembled assemble(const PipelineConfig& c) {
  require_input(c.counts_file, "counts_file");
  require_input(c.hurdat2_file, "hurdat2_file");
  require_input(c.impacts_file, "impacts_file");

  std::ifstream counts_in(c.counts_file, std::ios::binary);
  if (!counts_in) throw Error::at("cannot open {}", c.counts_file);
  auto rows = corpus::read_counts_file(counts_in, c.counts_file);

  auto tracks = hurdat2::parse_hurdat2(read_text_file(c.hurdat2_file));

  std::ifstream impacts_in(c.impacts_file, std::ios::binary);
  if (!impacts_in) throw Error::at("cannot open {}", c.impacts_file);
  auto impacts = dossier::parse_impacts(impacts_in, c.impacts_file, c.study_window);

  if (!c.storms.empty()) {
    std::set<std::string> keep;
    for (const auto& name : c.storms) keep.insert(lower(name));
    std::erase_if(impacts, [&](const dossier::StormImpact& i) { return !keep.contains(lower(i.name)); });
  }
  if (!c.seasons.empty()) {
    std::set<int> keep(c.seasons.begin(), c.seasons.end());
    std::erase_if(impacts, [&](const dossier::StormImpact& i) { return !keep.contains(i.season); });
  }
  if (impacts.empty()) throw Error::at("no storms remain after filtering {}", c.impacts_file);

  dossier::SeriesStore store(std::move(rows), c.corpus_kind, c.language);
  auto join = dossier::assemble_all(impacts, tracks, store, c.window_days);
  for (const auto& err : join.errors) log::warn("{}", err);
  if (join.dossiers.empty()) throw Error::at("no storms could be assembled from {}", c.impacts_file);
  return {std::move(join.dossiers), std::move(store)};
}

void cmd_ingest(const PipelineConfig& c) {
  require_input(c.tweets_file, "tweets_file");
  if (c.counts_file.empty()) throw Error::at("config does not set counts_file");

  std::ifstream in(c.tweets_file, std::ios::binary);
  if (!in) throw Error::at("cannot open {}", c.tweets_file);
  corpus::IngestReport report;
  auto rows = corpus::ingest_tweets_tsv(in, &report);

  if (fs::path dir = fs::path(c.counts_file).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ostringstream out;
  corpus::write_counts_file(out, std::move(rows));
  write_atomic(c.counts_file, out.str());
  fmt::print("ingest: {} tweets read ({} skipped), counts written to {}\n", report.tweets_seen,
             report.tweets_skipped, c.counts_file);
}

void cmd_metrics(const PipelineConfig& c, const Assembled& world) {
  std::ostringstream out;
  metrics::write_summary_csv(out, world.dossiers);
  write_atomic(fs::path(c.output_dir) / "summary.csv", out.str());
  fmt::print("metrics: summary.csv covers {} storms\n", world.dossiers.size());
}

void cmd_fit_decay(const PipelineConfig& c, const Assembled& world) {
  constexpr std::size_t kBiexpMinPoints = 4;
  std::vector<std::vector<decay::FitReportRow>> per_storm(world.dossiers.size());
  for_each_indexed(world.dossiers.size(), c.jobs, [&](std::size_t i) {
    const auto& d = world.dossiers[i];
    for (const auto* series : {&d.hashtag_series, &d.bigram_series}) {
      if (!decay::eligible_for_fit(*series, c.decay_min_run_days)) continue;
      auto segment = decay::decay_segment(*series);
      if (segment.size() < kBiexpMinPoints) continue;
      for (auto model :
           {decay::ModelKind::biexponential, decay::ModelKind::exponential, decay::ModelKind::powerlaw}) {
        per_storm[i].push_back({d.impact.name, d.impact.season, series->pattern.gram_kind(),
                                decay::fit_decay(segment, model, c.decay_fit)});
      }
    }
  });

  std::vector<decay::FitReportRow> rows;
  std::size_t storms_fitted = 0;
  for (auto& chunk : per_storm) {
    storms_fitted += chunk.empty() ? 0 : 1;
    rows.insert(rows.end(), std::make_move_iterator(chunk.begin()), std::make_move_iterator(chunk.end()));
  }
  std::ostringstream out;
  decay::write_fit_report_csv(out, rows);
  write_atomic(fs::path(c.output_dir) / "decay_fits.csv", out.str());
  fmt::print("fit-decay: {} fits across {} of {} storms -> decay_fits.csv\n", rows.size(), storms_fitted,
             world.dossiers.size());
}

struct RegressRun {
  std::string filename;
  bayes::RegressionSpec spec;
  bool optional = false;  // per-category slices may lack enough storms
};

std::vector<RegressRun> regression_runs(const PipelineConfig& c) {
  std::vector<RegressRun> runs;
  auto spec_for = [&](bayes::ModelFamily model) {
    bayes::RegressionSpec s;
    s.model = model;
    s.sampler = c.sampler;
    return s;
  };
  runs.push_back({"regression1.csv", spec_for(bayes::ModelFamily::reg1), false});
  runs.push_back({"regression2.csv", spec_for(bayes::ModelFamily::reg2), false});
  runs.push_back({"regression3.csv", spec_for(bayes::ModelFamily::reg3), false});

  const std::array<std::pair<const char*, std::optional<int>>, 7> groups{{
      {"ts", 0},
      {"cat1", 1},
      {"cat2", 2},
      {"cat3", 3},
      {"cat4", 4},
      {"cat5", 5},
      {"all", std::nullopt},
  }};
  const std::array<std::pair<bayes::ImpactKind, const char*>, 2> impacts{{
      {bayes::ImpactKind::deaths, "deaths"},
      {bayes::ImpactKind::damage, "damage"},
  }};
  for (const auto& [label, category] : groups) {
    for (const auto& [impact, impact_label] : impacts) {
      auto spec = spec_for(bayes::ModelFamily::per_category);
      spec.impact = impact;
      spec.category = category;
      runs.push_back({fmt::format("category_{}_{}.csv", label, impact_label), spec, true});
    }
  }
  return runs;
}

void cmd_regress(const PipelineConfig& c, const Assembled& world) {
  for (const auto& run : regression_runs(c)) {
    bayes::RegressionData data;
    try {
      data = bayes::build_design(world.dossiers, run.spec);
    } catch (const Error& e) {
      if (!run.optional) throw;
      log::warn("{} skipped: {}", run.filename, e.what());
      continue;
    }
    auto samples = bayes::sample_posterior(run.spec, data);
    auto summary = bayes::summarize_posterior(samples);

    std::ostringstream out;
    bayes::write_posterior_csv(out, summary);
    fs::path target = fs::path(c.output_dir) / run.filename;
    write_atomic(target, out.str());

    if (c.write_chain_draws) {
      std::string stem = fs::path(run.filename).stem().string();
      for (int chain = 0; chain < run.spec.sampler.chains; ++chain) {
        std::ostringstream chain_out;
        bayes::write_chain_draws_csv(chain_out, samples, chain);
        write_atomic(fs::path(c.output_dir) / fmt::format("{}_chain{}.csv", stem, chain), chain_out.str());
      }
    }
    fmt::print("regress: {} ({} storms used, {} dropped, {} divergences)\n", run.filename,
               data.storm_ids.size(), data.dropped.size(), samples.divergences);
  }
}

void cmd_map(const PipelineConfig& c, const Assembled& world) {
  std::vector<const dossier::StormDossier*> tracked;
  for (const auto& d : world.dossiers) {
    if (d.track)
      tracked.push_back(&d);
    else
      log::info("map: {} {} has no best track; skipped", d.impact.name, d.impact.season);
  }
  if (tracked.empty()) throw Error::at("map: no storm in {} has a best track", c.impacts_file);

  std::vector<mapgen::SmoothedSeries> smoothed(tracked.size());
  for_each_indexed(tracked.size(), c.jobs, [&](std::size_t i) {
    std::vector<Instant> stamps;
    stamps.reserve(tracked[i]->track->points.size());
    for (const auto& p : tracked[i]->track->points) stamps.push_back(p.timestamp);
    smoothed[i] = mapgen::smooth_rates(tracked[i]->hashtag_series, stamps);
  });

  double batch_max = 0.0;
  for (const auto& series : smoothed)
    for (const auto& sample : series.samples) batch_max = std::max(batch_max, sample.rate);
  const double k = mapgen::default_scale(batch_max, c.scale_max_degrees);

  std::vector<mapgen::EnvelopePolygon> envelopes(tracked.size());
  for_each_indexed(tracked.size(), c.jobs, [&](std::size_t i) {
    envelopes[i] = mapgen::build_envelope(*tracked[i]->track, smoothed[i], k);
  });

  std::map<int, std::vector<std::size_t>> by_season;
  for (std::size_t i = 0; i < tracked.size(); ++i) by_season[tracked[i]->impact.season].push_back(i);
  for (const auto& [season, idxs] : by_season) {
    std::vector<mapgen::EnvelopePolygon> season_envelopes;
    std::vector<hurdat2::StormTrack> season_tracks;
    for (std::size_t i : idxs) {
      season_envelopes.push_back(envelopes[i]);
      season_tracks.push_back(*tracked[i]->track);
    }
    auto name = fmt::format("map_{}.geojson", season);
    write_atomic(fs::path(c.output_dir) / name, mapgen::emit_geojson(season_envelopes, season_tracks, season));
    fmt::print("map: {} has {} storms (k = {:.6g} deg per unit rate)\n", name, idxs.size(), k);
  }
}

void cmd_report_extras(const PipelineConfig& c, const Assembled& world) {
  std::ostringstream radar;
  metrics::write_radar_csv(radar, metrics::radar_table(world.dossiers));
  write_atomic(fs::path(c.output_dir) / "radar.csv", radar.str());

  std::ostringstream share;
  share << "storm,season,date,share\n";
  for (const auto& d : world.dossiers) {
    auto hurricane = corpus::build_exact_gram_series(
        world.store.rows(), "hurricane", corpus::GramKind::unigram, world.store.corpus_kind(),
        world.store.language(), d.window_start, d.window_start + std::chrono::days(d.window_days - 1));
    auto ratio = metrics::attention_share(d.bigram_series, hurricane);
    for (std::size_t i = 0; i < ratio.values.size(); ++i) {
      Day day = ratio.start_date + std::chrono::days(static_cast<int>(i));
      share << fmt::format("{},{},{},", d.impact.name, d.impact.season, cal::format_day(day));
      if (ratio.values[i]) share << fmt::format("{:.10e}", *ratio.values[i]);
      share << '\n';
    }
  }
  write_atomic(fs::path(c.output_dir) / "attention_share.csv", share.str());
  fmt::print("report: radar.csv and attention_share.csv written\n");
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw Error::at("config file does not exist: {}", path);
  json doc;
  try {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::at("cannot open {}", path);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error::at("config {}: {}", path, e.what());
  }
  if (!doc.is_object()) throw Error::at("config {}: top level must be an object", path);

  PipelineConfig c;
  try {
    check_keys(doc, "config",
               {"counts_file", "hurdat2_file", "impacts_file", "tweets_file", "output_dir", "corpus",
                "language", "window_days", "study_window", "storms", "seasons", "decay", "sampler",
                "write_chain_draws", "scale_max_degrees", "jobs"});
    c.counts_file = doc.value("counts_file", "");
    c.hurdat2_file = doc.value("hurdat2_file", "");
    c.impacts_file = doc.value("impacts_file", "");
    c.tweets_file = doc.value("tweets_file", "");
    c.output_dir = doc.value("output_dir", c.output_dir);

    if (doc.contains("corpus")) {
      auto kind = doc.at("corpus").get<std::string>();
      if (kind == "all")
        c.corpus_kind = corpus::CorpusKind::all;
      else if (kind == "organic")
        c.corpus_kind = corpus::CorpusKind::organic;
      else
        throw Error::at("corpus must be \"all\" or \"organic\", got \"{}\"", kind);
    }
    c.language = doc.value("language", c.language);
    c.window_days = doc.value("window_days", c.window_days);
    if (doc.contains("study_window")) {
      const auto& w = doc.at("study_window");
      if (!w.is_array() || w.size() != 2)
        throw Error::at("study_window must be a [first_season, last_season] pair");
      c.study_window = dossier::StudyWindow{w.at(0).get<int>(), w.at(1).get<int>()};
    }
    if (doc.contains("storms")) c.storms = doc.at("storms").get<std::vector<std::string>>();
    if (doc.contains("seasons")) c.seasons = doc.at("seasons").get<std::vector<int>>();

    if (doc.contains("decay")) {
      const auto& d = doc.at("decay");
      check_keys(d, "decay",
                 {"min_run_days", "p_lo", "p_hi", "r_lo", "r_hi", "q_lo", "q_hi", "alpha_lo", "alpha_hi",
                  "grid_starts", "random_starts", "max_iterations"});
      c.decay_min_run_days = d.value("min_run_days", c.decay_min_run_days);
      c.decay_fit.p_lo = d.value("p_lo", c.decay_fit.p_lo);
      c.decay_fit.p_hi = d.value("p_hi", c.decay_fit.p_hi);
      c.decay_fit.r_lo = d.value("r_lo", c.decay_fit.r_lo);
      c.decay_fit.r_hi = d.value("r_hi", c.decay_fit.r_hi);
      c.decay_fit.q_lo = d.value("q_lo", c.decay_fit.q_lo);
      c.decay_fit.q_hi = d.value("q_hi", c.decay_fit.q_hi);
      c.decay_fit.alpha_lo = d.value("alpha_lo", c.decay_fit.alpha_lo);
      c.decay_fit.alpha_hi = d.value("alpha_hi", c.decay_fit.alpha_hi);
      c.decay_fit.grid_starts = d.value("grid_starts", c.decay_fit.grid_starts);
      c.decay_fit.random_starts = d.value("random_starts", c.decay_fit.random_starts);
      c.decay_fit.max_iterations = d.value("max_iterations", c.decay_fit.max_iterations);
    }

    if (doc.contains("sampler")) {
      const auto& s = doc.at("sampler");
      check_keys(s, "sampler", {"chains", "draws", "burn_in", "seed", "max_tree_depth", "target_accept"});
      c.sampler.chains = s.value("chains", c.sampler.chains);
      c.sampler.draws = s.value("draws", c.sampler.draws);
      c.sampler.burn_in = s.value("burn_in", c.sampler.burn_in);
      c.sampler.max_tree_depth = s.value("max_tree_depth", c.sampler.max_tree_depth);
      c.sampler.target_accept = s.value("target_accept", c.sampler.target_accept);
      if (s.contains("seed")) {
        c.sampler.seed = s.at("seed").get<std::uint64_t>();
        c.seed_set = true;
      }
    }

    c.write_chain_draws = doc.value("write_chain_draws", c.write_chain_draws);
    c.scale_max_degrees = doc.value("scale_max_degrees", c.scale_max_degrees);
    c.jobs = doc.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw Error::at("config {}: {}", path, e.what());
  } catch (const Error& e) {
    throw Error::at("config {}: {}", path, e.what());
  }

  if (c.window_days < 1) throw Error::at("config {}: window_days must be positive", path);
  if (c.scale_max_degrees <= 0.0) throw Error::at("config {}: scale_max_degrees must be positive", path);
  if (c.jobs < 0) throw Error::at("config {}: jobs must be nonnegative", path);
  return c;
}

void run_pipeline(PipelineConfig config, const std::string& command, const Overrides& overrides) {
  if (overrides.seed) {
    config.sampler.seed = *overrides.seed;
    config.seed_set = true;
  }
  if (overrides.jobs) config.jobs = *overrides.jobs;
  if (overrides.scale_max_degrees) config.scale_max_degrees = *overrides.scale_max_degrees;

  if (config.jobs < 0) throw Error::at("jobs must be nonnegative, got {}", config.jobs);
  if (config.jobs == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    config.jobs = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (config.scale_max_degrees <= 0.0)
    throw Error::at("scale-max-degrees must be positive, got {}", config.scale_max_degrees);
  config.sampler.jobs = config.jobs;
  config.decay_fit.seed = config.sampler.seed;

  constexpr std::array<std::string_view, 6> kCommands{"ingest", "metrics", "fit-decay",
                                                      "regress", "map",     "report"};
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw Error::at("unknown command: {}", command);

  if ((command == "fit-decay" || command == "regress" || command == "report") && !config.seed_set)
    throw Error::at("{} needs a seed; set sampler.seed in the config or pass --seed", command);

  if (command == "ingest") {
    cmd_ingest(config);
    return;
  }

  Assembled world = assemble(config);
  fs::create_directories(config.output_dir);
  if (command == "metrics" || command == "report") cmd_metrics(config, world);
  if (command == "fit-decay" || command == "report") cmd_fit_decay(config, world);
  if (command == "regress" || command == "report") cmd_regress(config, world);
  if (command == "map" || command == "report") cmd_map(config, world);
  if (command == "report") cmd_report_extras(config, world);
}

}  // namespace stormlens::pipeline
