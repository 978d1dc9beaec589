#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stormlens/corpus.hpp"
#include "stormlens/hurdat2.hpp"

namespace stormlens::dossier {

/// Impact record for one storm. Absent fields mean "unknown", not zero.
/// max_category 0 marks a system that never reached hurricane strength.
struct StormImpact {
  std::string name;
  int season = 0;
  std::optional<std::int64_t> deaths;
  std::optional<double> damage_usd;
  std::optional<int> max_category;  // 0 (tropical storm) .. 5
};

struct StudyWindow {
  int first_season = 0;
  int last_season = 0;
};

/// Parses the impacts CSV (header `name,season,deaths,damage_usd,max_category`,
/// empty field = unknown, `TS` accepted for max_category 0). Seasons outside
/// the study window and duplicate (name, season) pairs are errors.
std::vector<StormImpact> parse_impacts(std::istream& in, std::string_view source_name,
                                       const std::optional<StudyWindow>& window = std::nullopt);

/// Usage-rate series source: daily count rows plus the corpus slice they are
/// read from. Series are built on demand once a storm's window is known.
class SeriesStore {
 public:
  SeriesStore(std::vector<corpus::NgramCountRow> rows, corpus::CorpusKind corpus_kind, std::string language);

  corpus::UsageRateSeries series(const corpus::StormPattern& pattern, Day window_start, int window_days) const;

  /// Earliest day on which either pattern of `storm_name` has a positive
  /// count, if any.
  std::optional<Day> first_active_day(std::string_view storm_name) const;

  corpus::CorpusKind corpus_kind() const { return corpus_kind_; }
  const std::string& language() const { return language_; }
  const std::vector<corpus::NgramCountRow>& rows() const { return rows_; }

 private:
  std::vector<corpus::NgramCountRow> rows_;
  corpus::CorpusKind corpus_kind_;
  std::string language_;
};

/// One storm's joined analysis record: impact facts, best track when known,
/// and both attention series over the same window.
struct StormDossier {
  StormImpact impact;
  std::optional<hurdat2::StormTrack> track;
  corpus::UsageRateSeries hashtag_series;
  corpus::UsageRateSeries bigram_series;
  Day window_start{};
  int window_days = 365;
};

/// Season encoded in a best-track id like AL092017.
int season_of(const hurdat2::StormTrack& track);

/// Case-insensitive (name, season) lookup.
const hurdat2::StormTrack* find_track(const std::vector<hurdat2::StormTrack>& tracks, std::string_view name,
                                      int season);

/// Joins one impact with its track and attention series. The window starts at
/// the first best-track timestamp's day; without a track it starts at the
/// first day of nonzero usage. Both series are truncated to window_days.
/// Throws Error when neither a track nor any usage exists, naming the
/// patterns searched.
StormDossier assemble_dossier(const StormImpact& impact, const std::vector<hurdat2::StormTrack>& tracks,
                              const SeriesStore& store, int window_days = 365);

/// Join over a whole impacts list. Total: every impact lands either in
/// `dossiers` or as a message in `errors`; nothing is dropped silently.
struct JoinResult {
  std::vector<StormDossier> dossiers;
  std::vector<std::string> errors;
};

JoinResult assemble_all(const std::vector<StormImpact>& impacts, const std::vector<hurdat2::StormTrack>& tracks,
                        const SeriesStore& store, int window_days = 365);

}  // namespace stormlens::dossier
