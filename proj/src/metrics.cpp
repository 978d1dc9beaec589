#include "stormlens/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "stormlens/error.hpp"

namespace stormlens::metrics {

double integrated_usage(const corpus::UsageRateSeries& series, int window_days) {
  if (window_days < 0) throw Error::at("window_days must be non-negative, got {}", window_days);
  std::size_t n = std::min(series.size(), static_cast<std::size_t>(window_days));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += series.rate_or_zero(i);
  return total;
}

std::pair<std::size_t, double> peak_usage(const corpus::UsageRateSeries& series) {
  if (series.size() == 0) throw Error("peak of an empty series");
  std::size_t best_day = 0;
  double best_rate = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    double rate = series.rate_or_zero(i);
    if (rate > best_rate) {
      best_rate = rate;
      best_day = i;
    }
  }
  return {best_day, best_rate};
}

int attention_quantile(const corpus::UsageRateSeries& series, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error::at("quantile q = {} outside (0, 1)", q);
  double total = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) total += series.rate_or_zero(i);
  if (total <= 0.0) throw Error("attention quantile undefined: integrated usage is zero");
  double target = q * total;
  double cumulative = 0.0;
  for (std::size_t d = 1; d <= series.size(); ++d) {
    cumulative += series.rate_or_zero(d - 1);
    if (cumulative >= target) return static_cast<int>(d);
  }
  // Floating-point shortfall at the end of the scan; the full sum qualifies.
  return static_cast<int>(series.size());
}

AttentionSummary summarize_attention(const corpus::UsageRateSeries& series, int window_days) {
  AttentionSummary s;
  s.integrated = integrated_usage(series, window_days);
  std::tie(s.max_day, s.max_rate) = peak_usage(series);
  if (s.integrated > 0.0) {
    s.q90_days = attention_quantile(series, 0.9);
    s.q99_days = attention_quantile(series, 0.99);
  }
  return s;
}

namespace {

/// Mid-rank vector: ties share the average of the ranks they occupy.
std::vector<double> mid_ranks(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw Error::at("rank correlation needs equal lengths ({} vs {})", xs.size(), ys.size());
  if (xs.size() < 2) throw Error("rank correlation needs at least 2 points");
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(xs) || constant(ys)) throw Error("rank correlation undefined for a constant vector");

  auto rx = mid_ranks(xs);
  auto ry = mid_ranks(ys);
  double n = static_cast<double>(xs.size());
  double mean = (n + 1.0) / 2.0;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double a = rx[i] - mean;
    double b = ry[i] - mean;
    num += a * b;
    dx += a * a;
    dy += b * b;
  }
  return num / std::sqrt(dx * dy);
}

RatioSeries attention_share(const corpus::UsageRateSeries& bigram_series,
                            const corpus::UsageRateSeries& unigram_series) {
  if (bigram_series.start_date != unigram_series.start_date || bigram_series.size() != unigram_series.size())
    throw Error("attention share needs series over the same window");
  RatioSeries out;
  out.start_date = bigram_series.start_date;
  out.values.resize(bigram_series.size());
  for (std::size_t i = 0; i < bigram_series.size(); ++i) {
    if (bigram_series.missing(i) || unigram_series.missing(i)) continue;
    double denom = *unigram_series.rates[i];
    if (denom == 0.0) continue;
    out.values[i] = *bigram_series.rates[i] / denom;
  }
  return out;
}

RadarTable radar_table(const std::vector<dossier::StormDossier>& dossiers) {
  if (dossiers.empty()) throw Error("radar table needs at least one storm");
  RadarTable table;
  for (const auto& d : dossiers) {
    table.storms.push_back(fmt::format("{} {}", d.impact.name, d.impact.season));
    AttentionSummary s = summarize_attention(d.hashtag_series, d.window_days);
    std::array<std::optional<double>, 6> row;
    row[0] = s.max_rate;
    row[1] = s.integrated;
    if (s.q90_days) row[2] = static_cast<double>(*s.q90_days);
    if (s.q99_days) row[3] = static_cast<double>(*s.q99_days);
    if (d.impact.damage_usd) row[4] = *d.impact.damage_usd;
    if (d.impact.deaths) row[5] = static_cast<double>(*d.impact.deaths);
    table.cells.push_back(row);
  }
  for (std::size_t col = 0; col < 6; ++col) {
    double max = 0.0;
    for (const auto& row : table.cells)
      if (row[col] && *row[col] > max) max = *row[col];
    for (auto& row : table.cells) {
      if (!row[col]) continue;
      if (max == 0.0)
        row[col] = std::nullopt;  // column degenerate, emit as absent
      else
        row[col] = *row[col] / max;
    }
  }
  return table;
}

void write_radar_csv(std::ostream& out, const RadarTable& table) {
  out << "storm";
  for (const char* m : kRadarMeasures) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < table.storms.size(); ++i) {
    out << table.storms[i];
    for (std::size_t col = 0; col < 6; ++col) {
      out << ',';
      if (table.cells[i][col]) out << fmt::format("{:.6f}", *table.cells[i][col]);
    }
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<dossier::StormDossier>& dossiers) {
  out << "name,season,integrated,max_rate,deaths,damage_usd,q99_days,q90_days\n";
  for (const auto& d : dossiers) {
    AttentionSummary s = summarize_attention(d.hashtag_series, d.window_days);
    out << d.impact.name << ',' << d.impact.season << ',' << fmt::format("{:.6e}", s.integrated) << ','
        << fmt::format("{:.6e}", s.max_rate) << ',';
    if (d.impact.deaths) out << *d.impact.deaths;
    out << ',';
    if (d.impact.damage_usd) out << fmt::format("{:.6e}", *d.impact.damage_usd);
    out << ',';
    if (s.q99_days) out << *s.q99_days;
    out << ',';
    if (s.q90_days) out << *s.q90_days;
    out << '\n';
  }
}

}  // namespace stormlens::metrics
