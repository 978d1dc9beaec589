#include "stormlens/dossier.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>

#include "stormlens/error.hpp"

namespace stormlens::dossier {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace

std::vector<StormImpact> parse_impacts(std::istream& in, std::string_view source_name,
                                       const std::optional<StudyWindow>& window) {
  std::vector<StormImpact> impacts;
  std::map<std::pair<std::string, int>, std::size_t> seen;

  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!saw_header) {
      std::vector<std::string> want{"name", "season", "deaths", "damage_usd", "max_category"};
      if (fields != want)
        throw Error::at("{}:{}: expected header 'name,season,deaths,damage_usd,max_category'", source_name,
                        line_no);
      saw_header = true;
      continue;
    }
    if (fields.size() != 5)
      throw Error::at("{}:{}: expected 5 fields, found {}", source_name, line_no, fields.size());

    StormImpact impact;
    impact.name = fields[0];
    if (impact.name.empty()) throw Error::at("{}:{}: empty storm name", source_name, line_no);

    auto parse_int = [&](const std::string& s, const char* what) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error::at("{}:{}: unparseable {} '{}'", source_name, line_no, what, s);
      return v;
    };

    impact.season = static_cast<int>(parse_int(fields[1], "season"));
    if (window && (impact.season < window->first_season || impact.season > window->last_season))
      throw Error::at("{}:{}: season {} outside the study window [{}, {}]", source_name, line_no, impact.season,
                      window->first_season, window->last_season);

    if (!fields[2].empty()) {
      std::int64_t deaths = parse_int(fields[2], "deaths");
      if (deaths < 0) throw Error::at("{}:{}: negative deaths", source_name, line_no);
      impact.deaths = deaths;
    }
    if (!fields[3].empty() && lower(fields[3]) != "nan") {
      double damage = 0.0;
      try {
        size_t used = 0;
        damage = std::stod(fields[3], &used);
        if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
      } catch (const std::exception&) {
        throw Error::at("{}:{}: unparseable damage_usd '{}'", source_name, line_no, fields[3]);
      }
      if (damage < 0) throw Error::at("{}:{}: negative damage_usd", source_name, line_no);
      impact.damage_usd = damage;
    }
    if (!fields[4].empty()) {
      if (lower(fields[4]) == "ts") {
        impact.max_category = 0;
      } else {
        std::int64_t cat = parse_int(fields[4], "max_category");
        if (cat < 0 || cat > 5)
          throw Error::at("{}:{}: max_category {} outside 0..5", source_name, line_no, cat);
        impact.max_category = static_cast<int>(cat);
      }
    }

    auto key = std::make_pair(lower(impact.name), impact.season);
    auto [it, inserted] = seen.emplace(key, line_no);
    if (!inserted)
      throw Error::at("{}:{}: duplicate storm ({}, {}) first seen on line {}", source_name, line_no, impact.name,
                      impact.season, it->second);
    impacts.push_back(std::move(impact));
  }
  if (!saw_header) throw Error::at("{}: missing header line", source_name);
  return impacts;
}

SeriesStore::SeriesStore(std::vector<corpus::NgramCountRow> rows, corpus::CorpusKind corpus_kind,
                         std::string language)
    : rows_(std::move(rows)), corpus_kind_(corpus_kind), language_(std::move(language)) {}

corpus::UsageRateSeries SeriesStore::series(const corpus::StormPattern& pattern, Day window_start,
                                            int window_days) const {
  if (window_days < 1) throw Error::at("window_days must be positive, got {}", window_days);
  Day window_end = window_start + std::chrono::days{window_days - 1};
  return corpus::build_usage_series(rows_, pattern, corpus_kind_, language_, window_start, window_end);
}

std::optional<Day> SeriesStore::first_active_day(std::string_view storm_name) const {
  auto hashtag = corpus::StormPattern::hashtag(storm_name);
  auto bigram = corpus::StormPattern::bigram(storm_name);
  std::optional<Day> first;
  for (const auto& row : rows_) {
    if (row.corpus_kind != corpus_kind_ || row.language != language_ || row.count <= 0) continue;
    const auto& pattern = row.gram_kind == corpus::GramKind::unigram ? hashtag : bigram;
    if (!corpus::match_storm_pattern(row.gram, row.gram_kind, pattern)) continue;
    if (!first || row.date < *first) first = row.date;
  }
  return first;
}

int season_of(const hurdat2::StormTrack& track) {
  const std::string& id = track.basin_id;
  if (id.size() >= 8) {
    int year = 0;
    auto [ptr, ec] = std::from_chars(id.data() + 4, id.data() + 8, year);
    if (ec == std::errc{} && ptr == id.data() + 8) return year;
  }
  if (!track.points.empty()) {
    std::chrono::year_month_day ymd{cal::day_of(track.points.front().timestamp)};
    return int(ymd.year());
  }
  throw Error::at("cannot determine season of track '{}'", id);
}

const hurdat2::StormTrack* find_track(const std::vector<hurdat2::StormTrack>& tracks, std::string_view name,
                                      int season) {
  std::string want = lower(name);
  for (const auto& track : tracks) {
    if (lower(track.name) == want && season_of(track) == season) return &track;
  }
  return nullptr;
}

StormDossier assemble_dossier(const StormImpact& impact, const std::vector<hurdat2::StormTrack>& tracks,
                              const SeriesStore& store, int window_days) {
  auto hashtag = corpus::StormPattern::hashtag(impact.name);
  auto bigram = corpus::StormPattern::bigram(impact.name);

  const hurdat2::StormTrack* track = find_track(tracks, impact.name, impact.season);
  std::optional<Day> start;
  if (track != nullptr && !track->points.empty()) {
    start = cal::day_of(track->points.front().timestamp);
  } else {
    start = store.first_active_day(impact.name);
  }
  if (!start)
    throw Error::at("{} {}: no track and no usage found (searched '{}' and '{}')", impact.name, impact.season,
                    hashtag.gram(), bigram.gram());

  StormDossier d{impact,
                 track != nullptr ? std::optional<hurdat2::StormTrack>(*track) : std::nullopt,
                 store.series(hashtag, *start, window_days),
                 store.series(bigram, *start, window_days),
                 *start,
                 window_days};
  return d;
}

JoinResult assemble_all(const std::vector<StormImpact>& impacts, const std::vector<hurdat2::StormTrack>& tracks,
                        const SeriesStore& store, int window_days) {
  JoinResult result;
  for (const StormImpact& impact : impacts) {
    try {
      result.dossiers.push_back(assemble_dossier(impact, tracks, store, window_days));
    } catch (const Error& e) {
      std::string prefix = fmt::format("{} {}: ", impact.name, impact.season);
      std::string msg = e.what();
      result.errors.push_back(msg.starts_with(prefix) ? msg : prefix + msg);
    }
  }
  return result;
}

}  // namespace stormlens::dossier
