#include "stormlens/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>

#include "stormlens/error.hpp"
#include "stormlens/log.hpp"

namespace stormlens::corpus {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char ca = a[i], cb = b[i];
    if (ca >= 'A' && ca <= 'Z') ca = static_cast<char>(ca - 'A' + 'a');
    if (cb >= 'A' && cb <= 'Z') cb = static_cast<char>(cb - 'A' + 'a');
    if (ca != cb) return false;
  }
  return true;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::int64_t parse_i64(std::string_view s, std::string_view what, std::string_view source, std::size_t line_no) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error::at("{}:{}: unparseable {} '{}'", source, line_no, what, s);
  return v;
}

}  // namespace

std::string_view to_string(CorpusKind k) { return k == CorpusKind::all ? "all" : "organic"; }
std::string_view to_string(GramKind k) { return k == GramKind::unigram ? "1" : "2"; }

StormPattern::StormPattern(std::string name, Kind kind) : storm_name_(std::move(name)), kind_(kind) {
  if (storm_name_.empty()) throw Error("storm pattern name must be non-empty");
  for (unsigned char c : storm_name_) {
    if (std::isspace(c)) throw Error::at("storm pattern name '{}' must not contain whitespace", storm_name_);
  }
}

StormPattern StormPattern::hashtag(std::string_view storm_name) {
  return StormPattern(to_lower_ascii(storm_name), Kind::hashtag);
}

StormPattern StormPattern::bigram(std::string_view storm_name) {
  return StormPattern(to_lower_ascii(storm_name), Kind::bigram);
}

std::string StormPattern::gram() const {
  return kind_ == Kind::hashtag ? "#hurricane" + storm_name_ : "hurricane " + storm_name_;
}

std::vector<std::string> tokenize_line(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string_view raw = text.substr(start, i - start);

    std::string prefix;
    if (raw.front() == '#' || raw.front() == '@') {
      prefix = raw.front();
      raw.remove_prefix(1);
    }
    while (!raw.empty() && is_ascii_punct(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
    while (!raw.empty() && is_ascii_punct(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
    if (raw.empty()) continue;  // drops bare punctuation and prefix-only tokens
    tokens.push_back(prefix + to_lower_ascii(raw));
  }
  return tokens;
}

void CountAccumulator::add_grams(const BucketKey& key, const std::vector<std::string>& grams) {
  Bucket& bucket = buckets_[key];
  for (const std::string& g : grams) {
    ++bucket.grams[g];
    ++bucket.total;
  }
}

void CountAccumulator::add_tweet(Day date, const std::string& language, bool is_retweet,
                                 const std::vector<std::string>& tokens) {
  std::vector<std::string> bigrams;
  if (tokens.size() >= 2) {
    bigrams.reserve(tokens.size() - 1);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) bigrams.push_back(tokens[i] + ' ' + tokens[i + 1]);
  }
  for (CorpusKind ck : {CorpusKind::all, CorpusKind::organic}) {
    if (ck == CorpusKind::organic && is_retweet) continue;
    if (!tokens.empty()) add_grams({date, ck, language, GramKind::unigram}, tokens);
    if (!bigrams.empty()) add_grams({date, ck, language, GramKind::bigram}, bigrams);
  }
}

void CountAccumulator::merge(const CountAccumulator& other) {
  for (const auto& [key, bucket] : other.buckets_) {
    Bucket& mine = buckets_[key];
    mine.total += bucket.total;
    for (const auto& [gram, count] : bucket.grams) mine.grams[gram] += count;
  }
}

std::vector<NgramCountRow> CountAccumulator::rows() const {
  std::vector<NgramCountRow> out;
  for (const auto& [key, bucket] : buckets_) {
    for (const auto& [gram, count] : bucket.grams) {
      out.push_back({key.date, key.corpus_kind, key.language, key.gram_kind, gram, count, bucket.total});
    }
  }
  return out;
}

std::vector<NgramCountRow> ingest_tweets(const std::vector<TweetRecord>& tweets, IngestReport* report) {
  CountAccumulator acc;
  IngestReport local;
  for (const TweetRecord& tw : tweets) {
    ++local.tweets_seen;
    Day date;
    try {
      date = cal::day_of(cal::parse_instant(tw.timestamp));
    } catch (const Error&) {
      ++local.tweets_skipped;
      continue;
    }
    acc.add_tweet(date, tw.language, tw.is_retweet, tokenize_line(tw.text));
  }
  if (report != nullptr) *report = local;
  return acc.rows();
}

std::vector<NgramCountRow> ingest_tweets_tsv(std::istream& in, IngestReport* report) {
  CountAccumulator acc;
  IngestReport local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++local.tweets_seen;
    auto fields = split_tabs(line);
    Day date;
    if (fields.size() != 4) {
      ++local.tweets_skipped;
      continue;
    }
    try {
      date = cal::day_of(cal::parse_instant(fields[0]));
    } catch (const Error&) {
      ++local.tweets_skipped;
      continue;
    }
    bool is_retweet = fields[2] == "1";
    acc.add_tweet(date, std::string(fields[1]), is_retweet, tokenize_line(fields[3]));
  }
  if (local.tweets_skipped > 0)
    log::warn("ingest: skipped {} of {} tweet lines", local.tweets_skipped, local.tweets_seen);
  if (report != nullptr) *report = local;
  return acc.rows();
}

bool match_storm_pattern(std::string_view gram, GramKind gram_kind, const StormPattern& pattern) {
  if (gram_kind != pattern.gram_kind())
    throw Error::at("gram kind mismatch: {}-gram checked against a {} pattern", to_string(gram_kind),
                    pattern.kind() == StormPattern::Kind::hashtag ? "hashtag" : "bigram");
  return iequals_ascii(gram, pattern.gram());
}

namespace {

UsageRateSeries build_series_impl(const std::vector<NgramCountRow>& rows, const StormPattern& pattern,
                                  std::string_view exact_gram, GramKind gram_kind, CorpusKind corpus_kind,
                                  const std::string& language, Day window_start, Day window_end,
                                  bool use_pattern) {
  if (window_end < window_start) throw Error("usage-series window is empty");
  std::size_t n = static_cast<std::size_t>(cal::days_between(window_start, window_end)) + 1;

  std::vector<std::optional<std::int64_t>> day_totals(n);
  std::vector<std::int64_t> matched(n, 0);
  for (const NgramCountRow& row : rows) {
    if (row.corpus_kind != corpus_kind || row.gram_kind != gram_kind || row.language != language) continue;
    if (row.date < window_start || row.date > window_end) continue;
    auto idx = static_cast<std::size_t>(cal::days_between(window_start, row.date));
    if (day_totals[idx].has_value() && *day_totals[idx] != row.day_total)
      throw Error::at("inconsistent day_total for {} ({} vs {})", cal::format_day(row.date), *day_totals[idx],
                      row.day_total);
    day_totals[idx] = row.day_total;
    bool hit = use_pattern ? match_storm_pattern(row.gram, row.gram_kind, pattern)
                           : iequals_ascii(row.gram, exact_gram);
    if (hit) matched[idx] += row.count;
  }

  UsageRateSeries series{pattern, corpus_kind, language, window_start, {}, {}};
  series.rates.resize(n);
  series.counts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!day_totals[i].has_value()) continue;  // day missing, not zero
    series.counts[i] = matched[i];
    series.rates[i] = static_cast<double>(matched[i]) / static_cast<double>(*day_totals[i]);
  }
  return series;
}

}  // namespace

UsageRateSeries build_usage_series(const std::vector<NgramCountRow>& rows, const StormPattern& pattern,
                                   CorpusKind corpus_kind, const std::string& language, Day window_start,
                                   Day window_end) {
  return build_series_impl(rows, pattern, {}, pattern.gram_kind(), corpus_kind, language, window_start, window_end,
                           true);
}

UsageRateSeries build_exact_gram_series(const std::vector<NgramCountRow>& rows, std::string_view gram,
                                        GramKind gram_kind, CorpusKind corpus_kind, const std::string& language,
                                        Day window_start, Day window_end) {
  // Placeholder pattern; only the exact gram drives matching here.
  StormPattern placeholder = StormPattern::hashtag("x");
  return build_series_impl(rows, placeholder, gram, gram_kind, corpus_kind, language, window_start, window_end, false);
}

std::vector<NgramCountRow> read_counts_file(std::istream& in, std::string_view source_name) {
  std::vector<NgramCountRow> rows;
  struct TotalKey {
    Day date;
    CorpusKind corpus;
    std::string lang;
    GramKind kind;
    auto operator<=>(const TotalKey&) const = default;
  };
  std::map<TotalKey, std::int64_t> totals;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 7)
      throw Error::at("{}:{}: expected 7 tab-separated fields, found {}", source_name, line_no, fields.size());

    NgramCountRow row;
    try {
      row.date = cal::parse_day(fields[0]);
    } catch (const Error& e) {
      throw Error::at("{}:{}: {}", source_name, line_no, e.what());
    }
    if (fields[1] == "all")
      row.corpus_kind = CorpusKind::all;
    else if (fields[1] == "organic")
      row.corpus_kind = CorpusKind::organic;
    else
      throw Error::at("{}:{}: unknown corpus '{}'", source_name, line_no, fields[1]);
    row.language = std::string(fields[2]);
    if (fields[3] == "1")
      row.gram_kind = GramKind::unigram;
    else if (fields[3] == "2")
      row.gram_kind = GramKind::bigram;
    else
      throw Error::at("{}:{}: unknown gram kind '{}'", source_name, line_no, fields[3]);
    row.gram = std::string(fields[4]);
    row.count = parse_i64(fields[5], "count", source_name, line_no);
    row.day_total = parse_i64(fields[6], "day_total", source_name, line_no);

    if (row.count < 0) throw Error::at("{}:{}: negative count", source_name, line_no);
    if (row.day_total <= 0) throw Error::at("{}:{}: day_total must be positive", source_name, line_no);
    if (row.count > row.day_total)
      throw Error::at("{}:{}: count {} exceeds day_total {}", source_name, line_no, row.count, row.day_total);

    TotalKey key{row.date, row.corpus_kind, row.language, row.gram_kind};
    auto [it, inserted] = totals.emplace(key, row.day_total);
    if (!inserted && it->second != row.day_total)
      throw Error::at("{}:{}: day_total {} disagrees with earlier value {} for {}", source_name, line_no,
                      row.day_total, it->second, cal::format_day(row.date));

    rows.push_back(std::move(row));
  }
  return rows;
}

void write_counts_file(std::ostream& out, std::vector<NgramCountRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const NgramCountRow& a, const NgramCountRow& b) {
    return std::tie(a.date, a.corpus_kind, a.language, a.gram_kind, a.gram) <
           std::tie(b.date, b.corpus_kind, b.language, b.gram_kind, b.gram);
  });
  out << "# date\tcorpus\tlang\tkind\tgram\tcount\tday_total\n";
  for (const NgramCountRow& row : rows) {
    out << cal::format_day(row.date) << '\t' << to_string(row.corpus_kind) << '\t' << row.language << '\t'
        << to_string(row.gram_kind) << '\t' << row.gram << '\t' << row.count << '\t' << row.day_total << '\n';
  }
}

}  // namespace stormlens::corpus
