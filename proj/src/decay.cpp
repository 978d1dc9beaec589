#include "stormlens/decay.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>

#include "stormlens/error.hpp"
#include "stormlens/metrics.hpp"
#include "stormlens/rng.hpp"

namespace stormlens::decay {

namespace {

constexpr double kLn10 = 2.302585092994045684;

/// Biexponential at N = 1. The p+r-q gap enters only through
/// phi = (1 - e^{-gap t})/gap, which expm1 keeps smooth through zero.
double biexp_unit(double p, double q, double r, double t) {
  double gap = p + r - q;
  double phi = gap == 0.0 ? t : -std::expm1(-gap * t) / gap;
  return std::exp(-(p + r) * t) + r * std::exp(-q * t) * phi;
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double mse = 0.0;
};

/// Ordinary least squares y = a + b x, with the slope clamped into
/// [slope_lo, slope_hi] and the intercept re-solved under the clamp.
LineFit fit_line_clamped(const std::vector<double>& xs, const std::vector<double>& ys, double slope_lo,
                         double slope_hi) {
  double n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.slope = std::clamp(fit.slope, slope_lo, slope_hi);
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    fit.mse += e * e;
  }
  fit.mse /= n;
  return fit;
}

/// Minimal Nelder-Mead in R^n. Deterministic; returns the best vertex.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, double step, int max_iterations) {
  std::size_t n = start.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];
    if (values[worst] - values[best] < 1e-13) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> point(n);
      for (std::size_t d = 0; d < n; ++d) point[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
      return point;
    };

    auto reflected = blend(-1.0);
    double fr = f(reflected);
    if (fr < values[best]) {
      auto expanded = blend(-2.0);
      double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
    } else if (fr < values[second_worst]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
    } else {
      auto contracted = blend(fr < values[worst] ? -0.5 : 0.5);
      double fc = f(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = std::move(contracted);
        values[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
          values[i] = f(simplex[i]);
        }
      }
    }
  }
  std::size_t best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return simplex[best];
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// Box transform: u in R maps to [lo, hi] on a log scale.
double to_box(double u, double lo, double hi) {
  return std::exp(std::log(lo) + sigmoid(u) * (std::log(hi) - std::log(lo)));
}

double from_box(double theta, double lo, double hi) {
  double frac = (std::log(theta) - std::log(lo)) / (std::log(hi) - std::log(lo));
  frac = std::clamp(frac, 1e-9, 1.0 - 1e-9);
  return std::log(frac / (1.0 - frac));
}

struct ProfiledBiexp {
  double p = 0.0, q = 0.0, r = 0.0;
  double log10_N = 0.0;
  double mse = 0.0;
};

/// MSE of the biexponential in log10 space with the amplitude concentrated
/// out: N enters the log-model additively, so its optimum is the mean
/// residual against the unit-amplitude curve.
ProfiledBiexp profile_biexp(const std::vector<DecayPoint>& segment, double p, double q, double r) {
  ProfiledBiexp out{p, q, r, 0.0, 0.0};
  double n = static_cast<double>(segment.size());
  std::vector<double> unit_log(segment.size());
  for (std::size_t i = 0; i < segment.size(); ++i)
    unit_log[i] = std::log10(biexp_unit(p, q, r, segment[i].t));
  double mean_residual = 0.0;
  for (std::size_t i = 0; i < segment.size(); ++i) mean_residual += segment[i].log10_rate - unit_log[i];
  out.log10_N = mean_residual / n;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    double e = segment[i].log10_rate - (out.log10_N + unit_log[i]);
    out.mse += e * e;
  }
  out.mse /= n;
  return out;
}

DecayFit fit_biexponential(const std::vector<DecayPoint>& segment, const FitConfig& cfg) {
  auto objective = [&](const std::vector<double>& u) {
    double p = to_box(u[0], cfg.p_lo, cfg.p_hi);
    double q = to_box(u[1], cfg.q_lo, cfg.q_hi);
    double r = to_box(u[2], cfg.r_lo, cfg.r_hi);
    return profile_biexp(segment, p, q, r).mse;
  };

  std::vector<std::array<double, 3>> starts;
  int g = std::max(1, cfg.grid_starts);
  for (int j = 0; j < g; ++j) {
    auto frac = [&](int k) { return (static_cast<double>(k % g) + 0.5) / static_cast<double>(g); };
    double fp = frac(j), fq = frac(j * 2 + 1), fr = frac(j * 3 + 2);
    starts.push_back({std::exp(std::log(cfg.p_lo) + fp * std::log(cfg.p_hi / cfg.p_lo)),
                      std::exp(std::log(cfg.q_lo) + fq * std::log(cfg.q_hi / cfg.q_lo)),
                      std::exp(std::log(cfg.r_lo) + fr * std::log(cfg.r_hi / cfg.r_lo))});
  }
  Rng rng = Rng::stream(cfg.seed, 0x6665636179ULL);
  for (int j = 0; j < cfg.random_starts; ++j) {
    starts.push_back({std::exp(std::log(cfg.p_lo) + rng.uniform01() * std::log(cfg.p_hi / cfg.p_lo)),
                      std::exp(std::log(cfg.q_lo) + rng.uniform01() * std::log(cfg.q_hi / cfg.q_lo)),
                      std::exp(std::log(cfg.r_lo) + rng.uniform01() * std::log(cfg.r_hi / cfg.r_lo))});
  }

  std::vector<double> best_u;
  double best_mse = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    std::vector<double> u0{from_box(s[0], cfg.p_lo, cfg.p_hi), from_box(s[1], cfg.q_lo, cfg.q_hi),
                           from_box(s[2], cfg.r_lo, cfg.r_hi)};
    auto u = nelder_mead(objective, u0, 0.8, cfg.max_iterations);
    double mse = objective(u);
    if (mse < best_mse) {
      best_mse = mse;
      best_u = u;
    }
  }

  ProfiledBiexp prof = profile_biexp(segment, to_box(best_u[0], cfg.p_lo, cfg.p_hi),
                                     to_box(best_u[1], cfg.q_lo, cfg.q_hi), to_box(best_u[2], cfg.r_lo, cfg.r_hi));
  DecayFit fit;
  fit.params.value = BiexponentialParams{std::pow(10.0, prof.log10_N), prof.p, prof.q, prof.r};
  fit.mse = prof.mse;
  fit.n_points = static_cast<int>(segment.size());
  auto taus = half_lives(fit.params);
  fit.tau1 = taus.tau1;
  fit.tau2 = taus.tau2;
  return fit;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::biexponential: return "biexponential";
    case ModelKind::exponential: return "exponential";
    case ModelKind::powerlaw: return "powerlaw";
  }
  return "";
}

double evaluate(const DecayParams& params, double t) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BiexponentialParams>) {
          return m.N * biexp_unit(m.p, m.q, m.r, t);
        } else if constexpr (std::is_same_v<T, ExponentialParams>) {
          return m.N * std::exp(-m.p * t);
        } else {
          return m.A * std::pow(t + 1.0, -m.alpha);
        }
      },
      params.value);
}

HalfLives half_lives(const DecayParams& params) {
  return std::visit(
      [](const auto& m) -> HalfLives {
        using T = std::decay_t<decltype(m)>;
        constexpr double ln2 = 0.6931471805599453094;
        if constexpr (std::is_same_v<T, BiexponentialParams>) {
          return {ln2 / (m.p + m.r), ln2 / m.q};
        } else if constexpr (std::is_same_v<T, ExponentialParams>) {
          return {ln2 / m.p, std::nullopt};
        } else {
          return {std::nullopt, std::nullopt};
        }
      },
      params.value);
}

std::vector<DecayPoint> decay_segment(const corpus::UsageRateSeries& series) {
  auto [peak_day, peak_rate] = metrics::peak_usage(series);
  if (peak_rate <= 0.0) throw Error("decay segment undefined: series has no positive rate");
  std::vector<DecayPoint> segment;
  for (std::size_t i = peak_day; i < series.size(); ++i) {
    double rate = series.rate_or_zero(i);
    if (rate <= 0.0) continue;
    segment.push_back({static_cast<double>(i - peak_day), std::log10(rate)});
  }
  return segment;
}

bool eligible_for_fit(const corpus::UsageRateSeries& series, int min_consecutive_days) {
  int run = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.rate_or_zero(i) > 0.0) {
      ++run;
      if (run >= min_consecutive_days) return true;
    } else {
      run = 0;
    }
  }
  return min_consecutive_days <= 0;
}

DecayFit fit_decay(const std::vector<DecayPoint>& segment, ModelKind model, const FitConfig& config) {
  std::size_t min_points = model == ModelKind::biexponential ? 4 : 2;
  if (segment.size() < min_points)
    throw Error::at("{} fit needs at least {} points, got {}", to_string(model), min_points, segment.size());

  if (model == ModelKind::biexponential) return fit_biexponential(segment, config);

  std::vector<double> xs(segment.size()), ys(segment.size());
  for (std::size_t i = 0; i < segment.size(); ++i) ys[i] = segment[i].log10_rate;

  DecayFit fit;
  fit.n_points = static_cast<int>(segment.size());
  if (model == ModelKind::exponential) {
    // log10 S = log10 N - (p/ln10) t: a line in t.
    for (std::size_t i = 0; i < segment.size(); ++i) xs[i] = segment[i].t;
    LineFit line = fit_line_clamped(xs, ys, -config.p_hi / kLn10, -config.p_lo / kLn10);
    fit.params.value = ExponentialParams{std::pow(10.0, line.intercept), -line.slope * kLn10};
    fit.mse = line.mse;
  } else {
    // log10 S = log10 A - alpha log10(t+1): a line in log10(t+1).
    for (std::size_t i = 0; i < segment.size(); ++i) xs[i] = std::log10(segment[i].t + 1.0);
    LineFit line = fit_line_clamped(xs, ys, -config.alpha_hi, -config.alpha_lo);
    fit.params.value = PowerLawParams{std::pow(10.0, line.intercept), -line.slope};
    fit.mse = line.mse;
  }
  auto taus = half_lives(fit.params);
  fit.tau1 = taus.tau1;
  fit.tau2 = taus.tau2;
  return fit;
}

ModelComparison compare_decay_models(const std::vector<DecayFit>& fits) {
  if (fits.empty()) throw Error("model comparison needs at least one fit");
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fits[a].mse != fits[b].mse) return fits[a].mse < fits[b].mse;
    return fits[a].params.kind() < fits[b].params.kind();
  });
  ModelComparison cmp;
  for (std::size_t i : order) {
    cmp.ranking.push_back(fits[i].params.kind());
    cmp.mse_by_model.emplace_back(fits[i].params.kind(), fits[i].mse);
  }
  return cmp;
}

void write_fit_report_csv(std::ostream& out, const std::vector<FitReportRow>& rows) {
  out << "storm,season,pattern_kind,model,N,p,q,r,tau1,tau2,mse,n_points\n";
  for (const FitReportRow& row : rows) {
    out << row.storm << ',' << row.season << ',' << corpus::to_string(row.pattern_kind) << ','
        << to_string(row.fit.params.kind());
    auto cell = [&](std::optional<double> v) {
      out << ',';
      if (v) out << fmt::format("{:.8e}", *v);
    };
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, BiexponentialParams>) {
            cell(m.N);
            cell(m.p);
            cell(m.q);
            cell(m.r);
          } else if constexpr (std::is_same_v<T, ExponentialParams>) {
            cell(m.N);
            cell(m.p);
            cell(std::nullopt);
            cell(std::nullopt);
          } else {
            cell(m.A);
            cell(m.alpha);
            cell(std::nullopt);
            cell(std::nullopt);
          }
        },
        row.fit.params.value);
    cell(row.fit.tau1);
    cell(row.fit.tau2);
    out << ',' << fmt::format("{:.8e}", row.fit.mse) << ',' << row.fit.n_points << '\n';
  }
}

}  // namespace stormlens::decay
