#include "stormlens/bayes.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "stormlens/error.hpp"
#include "stormlens/log.hpp"
#include "stormlens/metrics.hpp"
#include "stormlens/rng.hpp"

namespace stormlens::bayes {

namespace {

constexpr double kUsageOffset = 1e-8;
constexpr double kDeathOffset = 0.1;
constexpr double kDamageOffset = 1e4;

bool needs_interaction(ModelFamily family) { return family == ModelFamily::reg2 || family == ModelFamily::reg3; }

}  // namespace

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::per_category: return "per_category";
    case ModelFamily::reg1: return "reg1";
    case ModelFamily::reg2: return "reg2";
    case ModelFamily::reg3: return "reg3";
  }
  return "";
}

RegressionData build_design(const std::vector<dossier::StormDossier>& dossiers, const RegressionSpec& spec) {
  RegressionData data;
  std::vector<std::vector<double>> rows;

  for (const auto& d : dossiers) {
    std::string id = fmt::format("{} {}", d.impact.name, d.impact.season);
    auto drop = [&](std::string_view reason) { data.dropped.push_back(fmt::format("{}: {}", id, reason)); };

    if (!d.impact.max_category.has_value()) {
      drop("unknown max category");
      continue;
    }
    int category = *d.impact.max_category;
    if (spec.model == ModelFamily::per_category) {
      if (spec.category.has_value()) {
        if (category != *spec.category) continue;
      } else if (category < 1) {
        continue;  // all-hurricanes run keeps category 1..5
      }
    } else if (category < 1) {
      drop("tropical storm excluded");
      continue;
    }

    double I = metrics::integrated_usage(d.hashtag_series, d.window_days);
    double y = std::log10(I + kUsageOffset);

    std::vector<double> row{1.0};
    if (spec.model == ModelFamily::per_category) {
      if (spec.impact == ImpactKind::deaths) {
        if (!d.impact.deaths.has_value()) {
          drop("deaths unknown");
          continue;
        }
        row.push_back(std::log10(static_cast<double>(*d.impact.deaths) + kDeathOffset));
      } else {
        if (!d.impact.damage_usd.has_value()) {
          drop("damage unknown");
          continue;
        }
        row.push_back(std::log10(*d.impact.damage_usd + kDamageOffset));
      }
    } else {
      if (!d.impact.deaths.has_value()) {
        drop("deaths unknown");
        continue;
      }
      if (!d.impact.damage_usd.has_value()) {
        drop("damage unknown");
        continue;
      }
      double xd = std::log10(static_cast<double>(*d.impact.deaths) + kDeathOffset);
      double xm = std::log10(*d.impact.damage_usd + kDamageOffset);
      row.push_back(xd);
      row.push_back(xm);
      if (needs_interaction(spec.model)) row.push_back(xd * xm);
      if (spec.model == ModelFamily::reg3) {
        for (int c = 2; c <= 5; ++c) row.push_back(category == c ? 1.0 : 0.0);
      }
    }

    data.storm_ids.push_back(std::move(id));
    rows.push_back(std::move(row));
    data.y.conservativeResize(static_cast<Eigen::Index>(rows.size()));
    data.y[static_cast<Eigen::Index>(rows.size()) - 1] = y;
  }

  if (rows.size() < 3)
    throw Error::at("{} design has {} usable rows; need at least 3", to_string(spec.model), rows.size());

  data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];

  data.coef_names = {"a0"};
  if (spec.model == ModelFamily::per_category) {
    data.coef_names.push_back(spec.impact == ImpactKind::deaths ? "a_death" : "a_damage");
  } else {
    data.coef_names.push_back("a_death");
    data.coef_names.push_back("a_damage");
    if (needs_interaction(spec.model)) data.coef_names.push_back("a_dD");
    if (spec.model == ModelFamily::reg3)
      for (int c = 2; c <= 5; ++c) data.coef_names.push_back(fmt::format("a_C{}", c));
  }
  return data;
}

int parameter_count(const RegressionData& data, const RegressionSpec& spec) {
  int k = static_cast<int>(data.coef_names.size());
  if (!spec.fixed_sigma.has_value()) ++k;
  if (spec.model == ModelFamily::per_category) ++k;
  return k;
}

std::vector<std::string> parameter_names(const RegressionData& data, const RegressionSpec& spec) {
  std::vector<std::string> names = data.coef_names;
  if (!spec.fixed_sigma.has_value()) names.push_back("sd");
  if (spec.model == ModelFamily::per_category) names.push_back("tau");
  return names;
}

std::pair<double, Eigen::VectorXd> log_posterior_grad(const Eigen::VectorXd& params, const RegressionData& data,
                                                      const RegressionSpec& spec) {
  auto names = parameter_names(data, spec);
  if (params.size() != static_cast<Eigen::Index>(names.size()))
    throw Error::at("expected {} parameters, got {}", names.size(), params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i)
    if (!std::isfinite(params[i]))
      throw Error::at("non-finite value for parameter '{}'", names[static_cast<std::size_t>(i)]);

  Eigen::Index k = static_cast<Eigen::Index>(data.coef_names.size());
  Eigen::VectorXd coef = params.head(k);
  bool sample_sigma = !spec.fixed_sigma.has_value();
  bool per_category = spec.model == ModelFamily::per_category;

  double sigma;
  double s = 0.0;
  if (sample_sigma) {
    s = params[k];
    sigma = std::exp(s);
  } else {
    sigma = *spec.fixed_sigma;
    if (!(sigma > 0.0)) throw Error::at("fixed sigma must be positive, got {}", sigma);
  }
  double tau = 0.0, u = 0.0;
  if (per_category) {
    u = params[params.size() - 1];
    tau = std::exp(u);
  }

  double logp = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  double n = static_cast<double>(data.y.size());
  double sigma2 = sigma * sigma;

  // Gaussian likelihood; s enters through both the normalization and the
  // residual scale.
  if (data.y.size() > 0) {
    Eigen::VectorXd resid = data.y - data.X * coef;
    double sse = resid.squaredNorm();
    logp += -n * std::log(sigma) - 0.5 * sse / sigma2;
    grad.head(k) += data.X.transpose() * resid / sigma2;
    if (sample_sigma) grad[k] += -n + sse / sigma2;
  }

  // Coefficient priors.
  if (per_category) {
    // a0 ~ normal(-8, 1/sqrt(tau)); tau is a parameter, so its normalization
    // term 0.5 log(tau) stays in the density.
    double a0 = coef[0];
    logp += 0.5 * u - 0.5 * tau * (a0 + 8.0) * (a0 + 8.0);
    grad[0] += -tau * (a0 + 8.0);
    for (Eigen::Index j = 1; j < k; ++j) {
      logp += -0.5 * coef[j] * coef[j];
      grad[j] += -coef[j];
    }
  } else {
    double a0 = coef[0];
    logp += -(a0 + 8.0) * (a0 + 8.0) / 18.0;
    grad[0] += -(a0 + 8.0) / 9.0;
    for (Eigen::Index j = 1; j < k; ++j) {
      logp += -0.5 * coef[j] * coef[j];
      grad[j] += -coef[j];
    }
  }

  // Half-normal(5) prior on sigma, sampled as s = log(sigma) with Jacobian.
  if (sample_sigma) {
    logp += -sigma2 / 50.0 + s;
    grad[k] += -sigma2 / 25.0 + 1.0;
  }

  // gamma(3,1) prior on tau, sampled as u = log(tau): density in u is
  // proportional to exp(3u - tau), plus the a0-prior's tau terms above.
  if (per_category) {
    Eigen::Index iu = params.size() - 1;
    logp += 3.0 * u - tau;
    grad[iu] += 3.0 - tau;
    double a0 = coef[0];
    grad[iu] += 0.5 - 0.5 * tau * (a0 + 8.0) * (a0 + 8.0);
  }

  if (std::isnan(logp)) throw Error("log posterior evaluated to NaN at a finite point");
  return {logp, std::move(grad)};
}

PosteriorSamples sample_posterior(const RegressionSpec& spec, const RegressionData& data) {
  auto names = parameter_names(data, spec);
  int dim = parameter_count(data, spec);
  Eigen::Index k = static_cast<Eigen::Index>(data.coef_names.size());
  bool sample_sigma = !spec.fixed_sigma.has_value();
  bool per_category = spec.model == ModelFamily::per_category;

  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  center[0] = -8.0;
  // Prior means: half-normal(5) mean for sigma, gamma(3,1) mean for tau.
  if (sample_sigma) center[k] = std::log(5.0 * std::sqrt(2.0 / M_PI));
  if (per_category) center[dim - 1] = std::log(3.0);

  Target target = [&](const Eigen::VectorXd& point) {
    auto [logp, grad] = log_posterior_grad(point, data, spec);
    return TargetEval{logp, std::move(grad)};
  };

  std::vector<Eigen::VectorXd> inits;
  for (int c = 0; c < spec.sampler.chains; ++c) {
    Rng rng = Rng::stream(spec.sampler.seed, 0x696e6974ULL + static_cast<std::uint64_t>(c));
    Eigen::VectorXd init = center;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      for (int i = 0; i < dim; ++i) init[i] = center[i] + 0.1 * rng.normal();
      ok = std::isfinite(target(init).logp);
    }
    if (!ok)
      throw Error::at("chain {}: log posterior non-finite at every jittered initialization", c);
    inits.push_back(std::move(init));
  }

  NutsResult raw = run_nuts(target, inits, spec.sampler);

  PosteriorSamples samples;
  samples.param_names = names;
  samples.seed = spec.sampler.seed;
  samples.model = spec.model;
  samples.divergences = raw.divergences;
  samples.total_transitions = raw.total_transitions;
  samples.draws = std::move(raw.draws);
  // Report sigma and tau on their natural scales.
  if (sample_sigma) samples.draws[static_cast<std::size_t>(k)] = samples.draws[static_cast<std::size_t>(k)].array().exp();
  if (per_category) samples.draws.back() = samples.draws.back().array().exp();

  if (samples.total_transitions > 0) {
    double frac = static_cast<double>(samples.divergences) / samples.total_transitions;
    if (frac > 0.10)
      log::warn("{}: {:.1f}% divergent transitions; posterior geometry is suspect", to_string(spec.model),
                100.0 * frac);
  }
  return samples;
}

std::vector<ParamDiagnostics> convergence_diagnostics(const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw Error("no parameters to diagnose");
  Eigen::Index chains = samples.draws[0].rows();
  Eigen::Index draws = samples.draws[0].cols();
  if (chains < 2) throw Error("convergence diagnostics need at least 2 chains");
  if (draws < 4) throw Error("convergence diagnostics need at least 4 draws per chain");

  Eigen::Index half = draws / 2;
  std::vector<ParamDiagnostics> out;

  for (const Eigen::MatrixXd& param : samples.draws) {
    // Split each chain in half; work with m sequences of length half.
    Eigen::Index m = 2 * chains;
    Eigen::MatrixXd split(m, half);
    for (Eigen::Index c = 0; c < chains; ++c) {
      split.row(2 * c) = param.row(c).segment(0, half);
      split.row(2 * c + 1) = param.row(c).segment(draws - half, half);
    }
    double nd = static_cast<double>(half);
    double md = static_cast<double>(m);

    Eigen::VectorXd chain_mean = split.rowwise().mean();
    double grand_mean = chain_mean.mean();
    double B = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) B += (chain_mean[c] - grand_mean) * (chain_mean[c] - grand_mean);
    B *= nd / (md - 1.0);
    Eigen::VectorXd chain_var(m);
    for (Eigen::Index c = 0; c < m; ++c) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < half; ++i) {
        double dlt = split(c, i) - chain_mean[c];
        acc += dlt * dlt;
      }
      chain_var[c] = acc / (nd - 1.0);
    }
    double W = chain_var.mean();
    double vhat = (nd - 1.0) / nd * W + B / nd;

    ParamDiagnostics diag;
    diag.rhat = W > 0.0 ? std::sqrt(vhat / W) : 1.0;

    // Effective sample size: Geyer's initial positive sequence on the
    // split-chain autocorrelations.
    double tau_sum = 1.0;
    if (vhat > 0.0) {
      Eigen::MatrixXd centered = split;
      for (Eigen::Index c = 0; c < m; ++c) centered.row(c).array() -= chain_mean[c];
      auto rho_at = [&](Eigen::Index t) {
        double acov = 0.0;
        for (Eigen::Index c = 0; c < m; ++c) {
          double acc = 0.0;
          for (Eigen::Index i = 0; i + t < half; ++i) acc += centered(c, i) * centered(c, i + t);
          acov += acc / nd;
        }
        acov /= md;
        return 1.0 - (W - acov) / vhat;
      };
      double prev_pair = std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 1; t + 1 < half; t += 2) {
        double pair = rho_at(t) + rho_at(t + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);  // initial monotone estimate
        prev_pair = pair;
        tau_sum += 2.0 * pair;
      }
    }
    double total = md * nd;
    diag.n_eff = std::min(total, total / tau_sum);

    double sd_all = 0.0;
    double mean_all = param.mean();
    for (Eigen::Index c = 0; c < chains; ++c)
      for (Eigen::Index i = 0; i < draws; ++i) sd_all += (param(c, i) - mean_all) * (param(c, i) - mean_all);
    sd_all = std::sqrt(sd_all / (static_cast<double>(chains * draws) - 1.0));
    diag.mc_error = sd_all / std::sqrt(diag.n_eff);
    out.push_back(diag);
  }
  return out;
}

std::pair<double, double> hpd_interval(std::vector<double> draws, double mass) {
  if (draws.size() < 20) throw Error::at("HPD interval needs at least 20 draws, got {}", draws.size());
  if (!(mass > 0.0 && mass < 1.0)) throw Error::at("HPD mass {} outside (0, 1)", mass);
  std::sort(draws.begin(), draws.end());
  std::size_t n = draws.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)));
  k = std::max<std::size_t>(k, 1);
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    double width = draws[i + k - 1] - draws[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {draws[best], draws[best + k - 1]};
}

std::vector<SummaryRow> summarize_posterior(const PosteriorSamples& samples) {
  auto diags = convergence_diagnostics(samples);
  std::vector<SummaryRow> rows;
  for (std::size_t p = 0; p < samples.draws.size(); ++p) {
    const Eigen::MatrixXd& param = samples.draws[p];
    std::vector<double> flat(param.data(), param.data() + param.size());
    SummaryRow row;
    row.param = samples.param_names[p];
    row.mean = param.mean();
    double acc = 0.0;
    for (double v : flat) acc += (v - row.mean) * (v - row.mean);
    row.sd = std::sqrt(acc / (static_cast<double>(flat.size()) - 1.0));
    row.mc_error = diags[p].mc_error;
    std::tie(row.hpd_lo, row.hpd_hi) = hpd_interval(flat, 0.95);
    row.n_eff = diags[p].n_eff;
    row.rhat = diags[p].rhat;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_posterior_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "param,mean,sd,mc_error,hpd_2.5,hpd_97.5,n_eff,Rhat\n";
  for (const SummaryRow& row : rows) {
    out << row.param << ',' << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.1f},{:.4f}", row.mean, row.sd,
                                           row.mc_error, row.hpd_lo, row.hpd_hi, row.n_eff, row.rhat)
        << '\n';
  }
}

void write_chain_draws_csv(std::ostream& out, const PosteriorSamples& samples, int chain) {
  if (chain < 0 || samples.draws.empty() || chain >= samples.draws[0].rows())
    throw Error::at("chain {} out of range", chain);
  for (std::size_t p = 0; p < samples.param_names.size(); ++p) {
    if (p > 0) out << ',';
    out << samples.param_names[p];
  }
  out << '\n';
  Eigen::Index draws = samples.draws[0].cols();
  for (Eigen::Index i = 0; i < draws; ++i) {
    for (std::size_t p = 0; p < samples.draws.size(); ++p) {
      if (p > 0) out << ',';
      out << fmt::format("{:.10e}", samples.draws[p](chain, i));
    }
    out << '\n';
  }
}

}  // namespace stormlens::bayes
