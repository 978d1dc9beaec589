#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stormlens/corpus.hpp"

namespace stormlens::decay {

enum class ModelKind { biexponential, exponential, powerlaw };

std::string_view to_string(ModelKind kind);

/// S(t) = N/(p+r-q) * [(p-q) e^{-(p+r)t} + r e^{-qt}]
struct BiexponentialParams {
  double N = 0.0;
  double p = 0.0;
  double q = 0.0;
  double r = 0.0;
};

/// S(t) = N e^{-pt}
struct ExponentialParams {
  double N = 0.0;
  double p = 0.0;
};

/// S(t) = A (t+1)^{-alpha}; the +1 keeps t = 0 finite.
struct PowerLawParams {
  double A = 0.0;
  double alpha = 0.0;
};

struct DecayParams {
  std::variant<BiexponentialParams, ExponentialParams, PowerLawParams> value;

  ModelKind kind() const {
    return static_cast<ModelKind>(value.index());
  }
};

/// Model value at t days after the peak. Positive for all valid parameters;
/// the biexponential p+r-q -> 0 singularity is evaluated through its limit,
/// never by dividing by the vanishing gap.
double evaluate(const DecayParams& params, double t);

struct HalfLives {
  std::optional<double> tau1;  // ln2/(p+r), or ln2/p for the exponential
  std::optional<double> tau2;  // ln2/q, biexponential only
};

HalfLives half_lives(const DecayParams& params);

/// One decay observation: days since the peak and log10 of the usage rate.
struct DecayPoint {
  double t = 0.0;
  double log10_rate = 0.0;
};

/// Post-peak decay segment: day indices from the earliest maximum onward,
/// keeping only days with a positive rate (log10 of zero is undefined).
/// Throws Error when the series never goes positive.
std::vector<DecayPoint> decay_segment(const corpus::UsageRateSeries& series);

/// True iff the series contains a run of at least min_consecutive_days
/// consecutive days with positive rates (missing days break the run).
bool eligible_for_fit(const corpus::UsageRateSeries& series, int min_consecutive_days = 6);

struct FitConfig {
  double p_lo = 1e-3, p_hi = 10.0;
  double r_lo = 1e-3, r_hi = 10.0;
  double q_lo = 1e-3, q_hi = 1e-1;
  double alpha_lo = 1e-3, alpha_hi = 10.0;
  int grid_starts = 5;     // deterministic log-spaced multi-starts
  int random_starts = 3;   // additional seeded starts
  std::uint64_t seed = 0;
  int max_iterations = 500;
};

struct DecayFit {
  DecayParams params;
  std::optional<double> tau1;
  std::optional<double> tau2;
  double mse = 0.0;  // mean squared error in log10 space
  int n_points = 0;
};

/// Least-squares fit of log10 S(t) to the segment. Exponential and power-law
/// fits are closed-form lines (slopes clamped into the box); the
/// biexponential profile over (p, q, r) is minimized by multi-start
/// Nelder-Mead in box-transformed coordinates with N concentrated out.
/// Deterministic for a fixed config.
DecayFit fit_decay(const std::vector<DecayPoint>& segment, ModelKind model, const FitConfig& config = {});

/// Ranking of fits on one segment, ascending MSE; ties keep model-enum
/// order. Works for any non-empty fit list.
struct ModelComparison {
  std::vector<ModelKind> ranking;
  std::vector<std::pair<ModelKind, double>> mse_by_model;  // ranking order
};

ModelComparison compare_decay_models(const std::vector<DecayFit>& fits);

/// Fit report row; power-law fits store A under N and alpha under p.
struct FitReportRow {
  std::string storm;
  int season = 0;
  corpus::GramKind pattern_kind = corpus::GramKind::unigram;
  DecayFit fit;
};

void write_fit_report_csv(std::ostream& out, const std::vector<FitReportRow>& rows);

}  // namespace stormlens::decay
