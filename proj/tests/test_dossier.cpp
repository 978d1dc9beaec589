#include <doctest.h>

#include <fstream>
#include <sstream>

#include "stormlens/dossier.hpp"
#include "stormlens/error.hpp"

using namespace stormlens;
using namespace stormlens::dossier;

namespace {

std::ifstream open_data(const std::string& name) {
  std::ifstream in(std::string(STORMLENS_TEST_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  return in;
}

std::string read_data(const std::string& name) {
  auto in = open_data(name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("parses the bundled impacts table") {
  auto in = open_data("impacts_compare.csv");
  auto impacts = parse_impacts(in, "impacts_compare.csv");
  REQUIRE(impacts.size() == 26);
  CHECK(impacts[0].name == "Harvey");
  CHECK(impacts[0].season == 2017);
  CHECK(impacts[0].deaths == 107);
  CHECK(impacts[0].damage_usd == doctest::Approx(1.2e11));
  CHECK(impacts[0].max_category == 4);
  // Danny: damage unknown, zero deaths.
  const auto& danny = impacts.back();
  CHECK(danny.name == "Danny");
  CHECK(danny.deaths == 0);
  CHECK_FALSE(danny.damage_usd.has_value());
  // Bertha: zero damage is a value, not unknown.
  CHECK(impacts[24].damage_usd == doctest::Approx(0.0));
}

TEST_CASE("impacts parser validates structure") {
  auto parse = [](const std::string& body) {
    std::istringstream in(body);
    return parse_impacts(in, "mem");
  };
  CHECK_THROWS_WITH_AS(parse("wrong,header\n"), doctest::Contains("header"), Error);
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("header"), Error);
  std::string h = "name,season,deaths,damage_usd,max_category\n";
  CHECK(parse(h).empty());
  CHECK_THROWS_WITH_AS(parse(h + "Alpha,2030,5,1e6,1\nalpha,2030,6,2e6,2\n"),
                       doctest::Contains("duplicate"), Error);
  CHECK_THROWS_WITH_AS(parse(h + "Alpha,2030,-3,1e6,1\n"), doctest::Contains("negative deaths"), Error);
  CHECK_THROWS_WITH_AS(parse(h + "Alpha,2030,3,-1e6,1\n"), doctest::Contains("negative damage"), Error);
  CHECK_THROWS_WITH_AS(parse(h + "Alpha,2030,3,1e6,7\n"), doctest::Contains("max_category"), Error);
  CHECK_THROWS_WITH_AS(parse(h + "Alpha,twenty,3,1e6,1\n"), doctest::Contains("season"), Error);
  CHECK_THROWS_WITH_AS(parse(h + ",2030,3,1e6,1\n"), doctest::Contains("empty storm name"), Error);

  auto ts = parse(h + "Alpha,2030,5,1e6,TS\n");
  CHECK(ts[0].max_category == 0);
  auto blanks = parse(h + "Alpha,2030,,,\n");
  CHECK_FALSE(blanks[0].deaths.has_value());
  CHECK_FALSE(blanks[0].damage_usd.has_value());
  CHECK_FALSE(blanks[0].max_category.has_value());
}

TEST_CASE("study window bounds seasons") {
  std::string h = "name,season,deaths,damage_usd,max_category\n";
  std::istringstream ok(h + "Alpha,2030,1,1e6,1\n");
  CHECK_NOTHROW(parse_impacts(ok, "mem", StudyWindow{2030, 2032}));
  std::istringstream bad(h + "Alpha,2029,1,1e6,1\n");
  CHECK_THROWS_WITH_AS(parse_impacts(bad, "mem", StudyWindow{2030, 2032}),
                       doctest::Contains("study window"), Error);
}

namespace {

SeriesStore alpha_store() {
  std::vector<corpus::NgramCountRow> rows;
  auto add = [&](const char* date, corpus::GramKind kind, const char* gram, std::int64_t count,
                 std::int64_t total) {
    rows.push_back({cal::parse_day(date), corpus::CorpusKind::all, "en", kind, gram, count, total});
  };
  // Window days 0..3 for a storm starting 2030-07-01; one earlier day too.
  add("2030-06-30", corpus::GramKind::unigram, "#hurricanealpha", 0, 1000);
  add("2030-06-30", corpus::GramKind::bigram, "hurricane alpha", 0, 800);
  add("2030-07-01", corpus::GramKind::unigram, "#hurricanealpha", 10, 1000);
  add("2030-07-01", corpus::GramKind::bigram, "hurricane alpha", 40, 800);
  add("2030-07-02", corpus::GramKind::unigram, "#hurricanealpha", 5, 1000);
  add("2030-07-02", corpus::GramKind::bigram, "hurricane alpha", 16, 800);
  add("2030-07-03", corpus::GramKind::unigram, "#hurricanealpha", 1, 1000);
  add("2030-07-03", corpus::GramKind::bigram, "hurricane alpha", 8, 800);
  return SeriesStore(std::move(rows), corpus::CorpusKind::all, "en");
}

std::vector<hurdat2::StormTrack> alpha_track() {
  std::string text =
      "AL012030,              ALPHA,      2,\n"
      "20300701, 0000,  , TS, 20.0N, 60.0W,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, "
      "-999, -999, -999,\n"
      "20300701, 0600,  , TS, 20.5N, 60.5W,  50,  997, -999, -999, -999, -999, -999, -999, -999, -999, -999, "
      "-999, -999, -999,\n";
  return hurdat2::parse_hurdat2(text);
}

}  // namespace

TEST_CASE("season is read from the best-track id") {
  auto tracks = alpha_track();
  CHECK(season_of(tracks[0]) == 2030);
  CHECK(find_track(tracks, "alpha", 2030) == &tracks[0]);
  CHECK(find_track(tracks, "ALPHA", 2030) == &tracks[0]);
  CHECK(find_track(tracks, "alpha", 2031) == nullptr);
  CHECK(find_track(tracks, "bravo", 2030) == nullptr);
}

TEST_CASE("dossier window starts at the track start when a track exists") {
  StormImpact impact{"Alpha", 2030, 12, 3.0e8, 1};
  auto d = assemble_dossier(impact, alpha_track(), alpha_store(), 10);
  CHECK(d.window_start == cal::parse_day("2030-07-01"));
  CHECK(d.window_days == 10);
  REQUIRE(d.track.has_value());
  CHECK(d.track->basin_id == "AL012030");
  REQUIRE(d.hashtag_series.size() == 10);
  REQUIRE(d.bigram_series.size() == 10);
  CHECK(d.hashtag_series.rates[0].value() == doctest::Approx(0.01));
  CHECK(d.bigram_series.rates[0].value() == doctest::Approx(0.05));
  CHECK(d.hashtag_series.missing(5));  // beyond the bundled days
}

TEST_CASE("dossier without a track starts at first nonzero usage") {
  StormImpact impact{"Alpha", 2030, 12, 3.0e8, 1};
  auto d = assemble_dossier(impact, {}, alpha_store(), 3);
  // 2030-06-30 has counts of zero, so the first active day is July 1st.
  CHECK(d.window_start == cal::parse_day("2030-07-01"));
  CHECK_FALSE(d.track.has_value());
  CHECK(d.hashtag_series.size() == 3);
}

TEST_CASE("dossier with neither track nor usage names the searched patterns") {
  StormImpact impact{"Zeta", 2030, 0, std::nullopt, std::nullopt};
  CHECK_THROWS_WITH_AS(assemble_dossier(impact, alpha_track(), alpha_store()),
                       doctest::Contains("#hurricanezeta"), Error);
  CHECK_THROWS_WITH_AS(assemble_dossier(impact, alpha_track(), alpha_store()),
                       doctest::Contains("hurricane zeta"), Error);
}

TEST_CASE("series are truncated to the window length") {
  StormImpact impact{"Alpha", 2030, 12, 3.0e8, 1};
  auto d = assemble_dossier(impact, alpha_track(), alpha_store(), 2);
  CHECK(d.hashtag_series.size() == 2);
  CHECK(d.bigram_series.size() == 2);
  CHECK(d.hashtag_series.start_date == d.bigram_series.start_date);
}

TEST_CASE("join is total over the impacts list") {
  std::vector<StormImpact> impacts{
      {"Alpha", 2030, 12, 3.0e8, 1},
      {"Zeta", 2030, 0, std::nullopt, std::nullopt},
  };
  auto result = assemble_all(impacts, alpha_track(), alpha_store(), 5);
  CHECK(result.dossiers.size() == 1);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].find("Zeta 2030") != std::string::npos);
}

TEST_CASE("track fixture joins against the bundled archive") {
  auto tracks = hurdat2::parse_hurdat2(read_data("tracks_sample.txt"));
  CHECK(find_track(tracks, "Harvey", 2017) != nullptr);
  CHECK(find_track(tracks, "maria", 2017) != nullptr);
  CHECK(season_of(*find_track(tracks, "Dorian", 2019)) == 2019);
}
