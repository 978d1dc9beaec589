#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stormlens/calendar.hpp"

namespace stormlens::corpus {

enum class CorpusKind { all, organic };
enum class GramKind { unigram, bigram };

std::string_view to_string(CorpusKind k);
std::string_view to_string(GramKind k);

/// One daily count record: how often `gram` appeared on `date` in the given
/// corpus/language bucket, and the total count of all grams of that kind in
/// the same bucket (the usage-rate denominator).
struct NgramCountRow {
  Day date{};
  CorpusKind corpus_kind = CorpusKind::all;
  std::string language;
  GramKind gram_kind = GramKind::unigram;
  std::string gram;
  std::int64_t count = 0;
  std::int64_t day_total = 0;
};

/// A storm-name matching pattern: either the hashtag "#hurricane<name>"
/// (a unigram) or the two-word form "hurricane <name>" (a bigram).
class StormPattern {
 public:
  enum class Kind { hashtag, bigram };

  static StormPattern hashtag(std::string_view storm_name);
  static StormPattern bigram(std::string_view storm_name);

  const std::string& storm_name() const { return storm_name_; }
  Kind kind() const { return kind_; }

  /// The lowercase gram this pattern matches exactly.
  std::string gram() const;
  GramKind gram_kind() const { return kind_ == Kind::hashtag ? GramKind::unigram : GramKind::bigram; }

 private:
  StormPattern(std::string name, Kind kind);

  std::string storm_name_;  // lowercased, non-empty, no whitespace
  Kind kind_;
};

/// Daily usage rates f(t) for one pattern over a contiguous day window.
/// Index i corresponds to start_date + i days. A day with no denominator in
/// the source rows is missing (nullopt), which is distinct from f = 0.
struct UsageRateSeries {
  StormPattern pattern;
  CorpusKind corpus_kind = CorpusKind::all;
  std::string language;
  Day start_date{};
  std::vector<std::optional<double>> rates;
  std::vector<std::optional<std::int64_t>> counts;

  std::size_t size() const { return rates.size(); }
  bool missing(std::size_t i) const { return !rates[i].has_value(); }
  /// Rate with missing days read as zero.
  double rate_or_zero(std::size_t i) const { return rates[i].value_or(0.0); }
};

/// Splits a tweet body into lowercase tokens. Tokens are the
/// whitespace-separated units with leading/trailing ASCII punctuation
/// stripped, except that a single leading '#' or '@' survives. Tokens left
/// empty (or consisting only of the kept prefix) are dropped.
std::vector<std::string> tokenize_line(std::string_view text);

struct TweetRecord {
  std::string timestamp;  // ISO-8601 UTC, parsed during ingestion
  std::string language;
  bool is_retweet = false;
  std::string text;
};

struct IngestReport {
  std::int64_t tweets_seen = 0;
  std::int64_t tweets_skipped = 0;
};

/// Accumulates per-day unigram/bigram counts. Sharded accumulators can be
/// merged; merge is associative and commutative so shard order is irrelevant.
class CountAccumulator {
 public:
  void add_tweet(Day date, const std::string& language, bool is_retweet, const std::vector<std::string>& tokens);
  void merge(const CountAccumulator& other);
  std::vector<NgramCountRow> rows() const;

 private:
  struct BucketKey {
    Day date;
    CorpusKind corpus_kind;
    std::string language;
    GramKind gram_kind;
    auto operator<=>(const BucketKey&) const = default;
  };
  struct Bucket {
    std::map<std::string, std::int64_t> grams;
    std::int64_t total = 0;  // all grams of the kind, matching or not
  };

  void add_grams(const BucketKey& key, const std::vector<std::string>& grams);

  std::map<BucketKey, Bucket> buckets_;
};

/// Counts unigrams and adjacent-ordered-pair bigrams per UTC day and
/// language, for the `all` corpus (every tweet) and the `organic` corpus
/// (is_retweet = false only). Tweets with malformed timestamps are skipped
/// and tallied in the report.
std::vector<NgramCountRow> ingest_tweets(const std::vector<TweetRecord>& tweets, IngestReport* report = nullptr);

/// Streaming variant reading tab-separated lines
/// `timestamp <TAB> lang <TAB> retweet(0|1) <TAB> text`.
std::vector<NgramCountRow> ingest_tweets_tsv(std::istream& in, IngestReport* report = nullptr);

/// Case-insensitive exact match of a gram against a storm pattern.
/// Throws Error if gram_kind disagrees with the pattern's kind.
bool match_storm_pattern(std::string_view gram, GramKind gram_kind, const StormPattern& pattern);

/// Builds the daily usage-rate series of `pattern` over the closed day window
/// [window_start, window_end]. Days present in the bucket get
/// f = matching count / day_total (zero when the pattern never occurs);
/// days with no denominator at all are missing. Throws Error if rows within
/// one bucket disagree about day_total.
UsageRateSeries build_usage_series(const std::vector<NgramCountRow>& rows, const StormPattern& pattern,
                                   CorpusKind corpus_kind, const std::string& language, Day window_start,
                                   Day window_end);

/// Same windowing rules for one exact gram (e.g. the bare unigram
/// "hurricane", needed as the attention-share denominator).
UsageRateSeries build_exact_gram_series(const std::vector<NgramCountRow>& rows, std::string_view gram,
                                        GramKind gram_kind, CorpusKind corpus_kind, const std::string& language,
                                        Day window_start, Day window_end);

/// Counts file: UTF-8 TSV rows
/// `date <TAB> corpus(all|organic) <TAB> lang <TAB> kind(1|2) <TAB> gram <TAB> count <TAB> day_total`,
/// optional '#'-introduced header lines.
std::vector<NgramCountRow> read_counts_file(std::istream& in, std::string_view source_name);
void write_counts_file(std::ostream& out, std::vector<NgramCountRow> rows);

}  // namespace stormlens::corpus
