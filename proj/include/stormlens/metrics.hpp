#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stormlens/dossier.hpp"

namespace stormlens::metrics {

/// Per-storm attention summary. Quantile fields are day counts from the
/// window start (Q = 1 means everything landed on the first day).
struct AttentionSummary {
  double integrated = 0.0;
  double max_rate = 0.0;
  std::size_t max_day = 0;
  std::optional<int> q90_days;  // absent when integrated usage is zero
  std::optional<int> q99_days;
};

/// I = sum of f(t) over day indices 0..window_days-1; missing days count
/// as zero.
double integrated_usage(const corpus::UsageRateSeries& series, int window_days);

/// Earliest day attaining the maximum rate; an all-zero (or all-missing)
/// series peaks at (0, 0).
std::pair<std::size_t, double> peak_usage(const corpus::UsageRateSeries& series);

/// Smallest d >= 1 with sum_{t<d} f(t) >= q * I. Throws Error when I = 0
/// (quantile undefined) or q outside (0,1).
int attention_quantile(const corpus::UsageRateSeries& series, double q);

AttentionSummary summarize_attention(const corpus::UsageRateSeries& series, int window_days);

/// Spearman rank correlation with mid-ranks for ties. Throws Error for
/// length mismatch, fewer than 2 points, or a constant vector.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

/// Day-by-day ratio f_bigram / f_unigram over a shared window. Days where
/// either side is missing, or the unigram rate is zero, are missing.
struct RatioSeries {
  Day start_date{};
  std::vector<std::optional<double>> values;
};

RatioSeries attention_share(const corpus::UsageRateSeries& bigram_series,
                            const corpus::UsageRateSeries& unigram_series);

/// Radar measures in presentation order.
inline constexpr std::array<const char*, 6> kRadarMeasures{
    "max_rate", "integrated", "q90_days", "q99_days", "damage_usd", "deaths"};

/// Per-storm cells normalized to each column's maximum over the given
/// storms. Cells are absent where the underlying value is unknown (missing
/// impact fields, undefined quantiles) and whole columns are absent when
/// their maximum is zero.
struct RadarTable {
  std::vector<std::string> storms;  // "NAME SEASON" labels, input order
  std::vector<std::array<std::optional<double>, 6>> cells;
};

RadarTable radar_table(const std::vector<dossier::StormDossier>& dossiers);

void write_radar_csv(std::ostream& out, const RadarTable& table);

/// Raw per-storm summary rows in the comparison-table column order
/// (integrated, max, deaths, damage, Q0.99, Q0.9), hashtag series based.
void write_summary_csv(std::ostream& out, const std::vector<dossier::StormDossier>& dossiers);

}  // namespace stormlens::metrics
