#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stormlens/dossier.hpp"

namespace stormlens::bayes {

enum class ModelFamily { per_category, reg1, reg2, reg3 };

std::string_view to_string(ModelFamily family);

enum class ImpactKind { deaths, damage };

struct NutsConfig {
  int chains = 8;
  int draws = 2000;  // post-burn-in draws per chain
  int burn_in = 1000;
  std::uint64_t seed = 0;
  int max_tree_depth = 10;
  double target_accept = 0.8;
  int jobs = 1;  // worker threads for chain execution
};

struct RegressionSpec {
  ModelFamily model = ModelFamily::reg1;
  // per_category only: which impact drives the single slope, and which
  // category of storms enters (absent = all hurricanes).
  ImpactKind impact = ImpactKind::deaths;
  std::optional<int> category;
  NutsConfig sampler;
  // Test hook: pin sigma instead of sampling it (conjugate sub-case).
  std::optional<double> fixed_sigma;
};

/// Design matrix and response for one regression. X always carries the
/// intercept column first; coef_names align with X's columns.
struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> coef_names;
  std::vector<std::string> storm_ids;
  std::vector<std::string> dropped;  // rows excluded, with reasons
};

/// Builds y = log10(I + 1e-8) against the offset log impacts
/// (X_death = log10(deaths + 0.1), X_damage = log10(damage + 1e4)).
/// Regressions 1-3 exclude tropical storms; the per-category model keeps
/// only its category. Rows missing a needed impact are dropped into
/// `dropped`. Fewer than 3 usable rows is an error.
RegressionData build_design(const std::vector<dossier::StormDossier>& dossiers, const RegressionSpec& spec);

/// Unnormalized log posterior and its gradient at an unconstrained point.
/// Layout: coefficients, then s = log sigma (unless fixed), then u = log tau
/// (per-category model only). Throws Error on non-finite input, naming the
/// offending parameter.
std::pair<double, Eigen::VectorXd> log_posterior_grad(const Eigen::VectorXd& params, const RegressionData& data,
                                                      const RegressionSpec& spec);

/// Number of unconstrained parameters for the spec/data pair.
int parameter_count(const RegressionData& data, const RegressionSpec& spec);

/// Unconstrained parameter names in layout order.
std::vector<std::string> parameter_names(const RegressionData& data, const RegressionSpec& spec);

/// Generic no-U-turn sampler over an arbitrary differentiable target.
struct TargetEval {
  double logp = 0.0;
  Eigen::VectorXd grad;
};
using Target = std::function<TargetEval(const Eigen::VectorXd&)>;

struct NutsResult {
  // draws[param](chain, i): post-burn-in draws in the unconstrained space.
  std::vector<Eigen::MatrixXd> draws;
  int divergences = 0;       // divergent transitions after burn-in
  int total_transitions = 0; // post-burn-in transitions across chains
  std::vector<double> step_sizes;  // adapted step size per chain
};

/// Multinomial NUTS with dual-averaging step-size adaptation and a diagonal
/// mass matrix estimated during burn-in. Chain c draws from the stream
/// (seed, c); results are merged by chain index, so runs are reproducible
/// for a fixed config regardless of thread count.
NutsResult run_nuts(const Target& target, const std::vector<Eigen::VectorXd>& inits, const NutsConfig& config);

/// Posterior draws on the natural scale (sigma and tau exponentiated).
struct PosteriorSamples {
  std::vector<std::string> param_names;
  std::vector<Eigen::MatrixXd> draws;  // per parameter: chains x draws
  std::uint64_t seed = 0;
  ModelFamily model = ModelFamily::reg1;
  int divergences = 0;
  int total_transitions = 0;
};

/// Samples the regression posterior. Chains initialize at the prior means
/// plus N(0, 0.1^2) jitter. A divergent-transition fraction above 10% is
/// reported as a warning; a non-finite initial density is an error.
PosteriorSamples sample_posterior(const RegressionSpec& spec, const RegressionData& data);

struct ParamDiagnostics {
  double rhat = 0.0;
  double n_eff = 0.0;
  double mc_error = 0.0;
};

/// Split-chain R-hat and autocorrelation-based effective sample size
/// (initial-positive-sequence cutoff); mc_error = sd/sqrt(n_eff).
/// Needs >= 2 chains and >= 4 draws per chain.
std::vector<ParamDiagnostics> convergence_diagnostics(const PosteriorSamples& samples);

/// Shortest contiguous interval holding ceil(mass * n) sorted draws,
/// leftmost on width ties. Needs >= 20 draws.
std::pair<double, double> hpd_interval(std::vector<double> draws, double mass = 0.95);

struct SummaryRow {
  std::string param;
  double mean = 0.0;
  double sd = 0.0;
  double mc_error = 0.0;
  double hpd_lo = 0.0;
  double hpd_hi = 0.0;
  double n_eff = 0.0;
  double rhat = 0.0;
};

std::vector<SummaryRow> summarize_posterior(const PosteriorSamples& samples);

/// Columns: param,mean,sd,mc_error,hpd_2.5,hpd_97.5,n_eff,Rhat
void write_posterior_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// One CSV per chain: a column per parameter, a row per draw.
void write_chain_draws_csv(std::ostream& out, const PosteriorSamples& samples, int chain);

/// Multiplicative attention response to a 10-fold impact increase.
inline double fold_change(double coefficient) { return std::pow(10.0, coefficient); }

}  // namespace stormlens::bayes
