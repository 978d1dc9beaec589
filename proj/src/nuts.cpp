#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

#include "stormlens/bayes.hpp"
#include "stormlens/error.hpp"
#include "stormlens/rng.hpp"

namespace stormlens::bayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDivergenceThreshold = 1000.0;
constexpr double kDaGamma = 0.05;
constexpr double kDaT0 = 10.0;
constexpr double kDaKappa = 0.75;

double logsumexp2(double a, double b) {
  double hi = std::max(a, b);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd rho;
  Eigen::VectorXd grad;
  double logp = kNegInf;
  bool ok = false;
};

double kinetic(const Eigen::VectorXd& rho, const Eigen::VectorXd& inv_mass) {
  return 0.5 * (rho.array().square() * inv_mass.array()).sum();
}

/// One leapfrog step. A non-finite position is flagged without touching the
/// target, which is entitled to reject such points.
PhasePoint leapfrog(const Target& target, const Eigen::VectorXd& theta, const Eigen::VectorXd& rho,
                    const Eigen::VectorXd& grad, double step, const Eigen::VectorXd& inv_mass) {
  PhasePoint next;
  next.rho = rho + 0.5 * step * grad;
  next.theta = theta + step * (inv_mass.array() * next.rho.array()).matrix();
  if (!next.theta.allFinite()) return next;
  TargetEval eval = target(next.theta);
  if (!std::isfinite(eval.logp) || !eval.grad.allFinite()) {
    next.logp = kNegInf;
    return next;
  }
  next.rho += 0.5 * step * eval.grad;
  next.grad = std::move(eval.grad);
  next.logp = eval.logp;
  next.ok = true;
  return next;
}

bool uturn(const Eigen::VectorXd& theta_minus, const Eigen::VectorXd& theta_plus, const Eigen::VectorXd& rho_minus,
           const Eigen::VectorXd& rho_plus, const Eigen::VectorXd& inv_mass) {
  Eigen::VectorXd span = theta_plus - theta_minus;
  double forward = span.dot((inv_mass.array() * rho_plus.array()).matrix());
  double backward = span.dot((inv_mass.array() * rho_minus.array()).matrix());
  return forward < 0.0 || backward < 0.0;
}

struct Tree {
  Eigen::VectorXd theta_minus, rho_minus, grad_minus;
  Eigen::VectorXd theta_plus, rho_plus, grad_plus;
  Eigen::VectorXd theta_prop, grad_prop;
  double logp_prop = kNegInf;
  double log_weight = kNegInf;
  double sum_accept = 0.0;
  long n_leaves = 0;
  bool divergent = false;
  bool turning = false;
};

/// Builds a balanced subtree of 2^depth leapfrog steps in one direction,
/// carrying a multinomially-weighted proposal. Endpoints stay spatially
/// ordered: theta_minus is always the backward end of the subtrajectory.
/// Energy changes are taken against the transition's starting point as
/// (logp0 - logp) + (ke - ke0): the log-density difference is a single
/// subtraction, so any additive constant in the target cancels.
Tree build_tree(const Target& target, const Eigen::VectorXd& theta, const Eigen::VectorXd& rho,
                const Eigen::VectorXd& grad, int dir, int depth, double eps, double logp0, double ke0,
                const Eigen::VectorXd& inv_mass, Rng& rng) {
  if (depth == 0) {
    Tree leaf;
    leaf.n_leaves = 1;
    PhasePoint point = leapfrog(target, theta, rho, grad, dir * eps, inv_mass);
    if (!point.ok) {
      leaf.divergent = true;
      return leaf;
    }
    double delta = (logp0 - point.logp) + (kinetic(point.rho, inv_mass) - ke0);
    if (!std::isfinite(delta) || delta > kDivergenceThreshold) {
      leaf.divergent = true;
      leaf.sum_accept = std::isfinite(delta) ? std::exp(-delta) : 0.0;
      return leaf;
    }
    leaf.log_weight = -delta;
    leaf.sum_accept = std::min(1.0, std::exp(-delta));
    leaf.theta_minus = leaf.theta_plus = leaf.theta_prop = point.theta;
    leaf.rho_minus = leaf.rho_plus = point.rho;
    leaf.grad_minus = leaf.grad_plus = leaf.grad_prop = point.grad;
    leaf.logp_prop = point.logp;
    return leaf;
  }

  Tree first = build_tree(target, theta, rho, grad, dir, depth - 1, eps, logp0, ke0, inv_mass, rng);
  if (first.divergent || first.turning) return first;

  Tree second = dir > 0 ? build_tree(target, first.theta_plus, first.rho_plus, first.grad_plus, dir, depth - 1, eps,
                                     logp0, ke0, inv_mass, rng)
                        : build_tree(target, first.theta_minus, first.rho_minus, first.grad_minus, dir, depth - 1,
                                     eps, logp0, ke0, inv_mass, rng);
  first.sum_accept += second.sum_accept;
  first.n_leaves += second.n_leaves;
  if (second.divergent) {
    first.divergent = true;
    return first;
  }

  double combined = logsumexp2(first.log_weight, second.log_weight);
  if (std::log(rng.uniform01_pos()) < second.log_weight - combined) {
    first.theta_prop = second.theta_prop;
    first.grad_prop = second.grad_prop;
    first.logp_prop = second.logp_prop;
  }
  first.log_weight = combined;
  if (dir > 0) {
    first.theta_plus = second.theta_plus;
    first.rho_plus = second.rho_plus;
    first.grad_plus = second.grad_plus;
  } else {
    first.theta_minus = second.theta_minus;
    first.rho_minus = second.rho_minus;
    first.grad_minus = second.grad_minus;
  }
  first.turning = second.turning ||
                  uturn(first.theta_minus, first.theta_plus, first.rho_minus, first.rho_plus, inv_mass);
  return first;
}

struct Transition {
  Eigen::VectorXd theta;
  Eigen::VectorXd grad;
  double logp = kNegInf;
  double accept_stat = 0.0;
  bool divergent = false;
};

Transition nuts_transition(const Target& target, const Eigen::VectorXd& theta, double logp,
                           const Eigen::VectorXd& grad, double eps, const Eigen::VectorXd& inv_mass, Rng& rng,
                           int max_depth) {
  Eigen::Index dim = theta.size();
  Eigen::VectorXd rho(dim);
  for (Eigen::Index i = 0; i < dim; ++i) rho[i] = rng.normal() / std::sqrt(inv_mass[i]);
  double ke0 = kinetic(rho, inv_mass);

  Eigen::VectorXd theta_minus = theta, theta_plus = theta;
  Eigen::VectorXd rho_minus = rho, rho_plus = rho;
  Eigen::VectorXd grad_minus = grad, grad_plus = grad;

  Transition result;
  result.theta = theta;
  result.grad = grad;
  result.logp = logp;

  double lw_total = 0.0;  // the initial point carries weight exp(-(h0 - h0)) = 1
  double sum_accept = 0.0;
  long n_leaves = 0;

  for (int depth = 0; depth < max_depth; ++depth) {
    int dir = rng.coin() ? 1 : -1;
    Tree sub = dir > 0
                   ? build_tree(target, theta_plus, rho_plus, grad_plus, 1, depth, eps, logp, ke0, inv_mass, rng)
                   : build_tree(target, theta_minus, rho_minus, grad_minus, -1, depth, eps, logp, ke0, inv_mass, rng);
    sum_accept += sub.sum_accept;
    n_leaves += sub.n_leaves;
    if (sub.divergent) {
      result.divergent = true;
      break;
    }
    if (sub.turning) break;

    // Biased progressive sampling favors the fresh half of the trajectory.
    if (std::log(rng.uniform01_pos()) < sub.log_weight - lw_total) {
      result.theta = sub.theta_prop;
      result.grad = sub.grad_prop;
      result.logp = sub.logp_prop;
    }
    lw_total = logsumexp2(lw_total, sub.log_weight);

    if (dir > 0) {
      theta_plus = sub.theta_plus;
      rho_plus = sub.rho_plus;
      grad_plus = sub.grad_plus;
    } else {
      theta_minus = sub.theta_minus;
      rho_minus = sub.rho_minus;
      grad_minus = sub.grad_minus;
    }
    if (uturn(theta_minus, theta_plus, rho_minus, rho_plus, inv_mass)) break;
  }
  result.accept_stat = n_leaves > 0 ? sum_accept / static_cast<double>(n_leaves) : 0.0;
  return result;
}

double find_reasonable_epsilon(const Target& target, const Eigen::VectorXd& theta, double logp,
                               const Eigen::VectorXd& grad, const Eigen::VectorXd& inv_mass, Rng& rng) {
  Eigen::Index dim = theta.size();
  Eigen::VectorXd rho(dim);
  for (Eigen::Index i = 0; i < dim; ++i) rho[i] = rng.normal() / std::sqrt(inv_mass[i]);
  double ke0 = kinetic(rho, inv_mass);

  auto log_ratio_at = [&](double eps) {
    PhasePoint point = leapfrog(target, theta, rho, grad, eps, inv_mass);
    if (!point.ok) return kNegInf;
    double log_ratio = (point.logp - logp) - (kinetic(point.rho, inv_mass) - ke0);
    return std::isfinite(log_ratio) ? log_ratio : kNegInf;
  };

  double eps = 1.0;
  double log_ratio = log_ratio_at(eps);
  double a = log_ratio > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    if (!(a * log_ratio > -a * std::log(2.0))) break;
    eps *= a > 0 ? 2.0 : 0.5;
    if (eps < 1e-10 || eps > 1e7) break;
    log_ratio = log_ratio_at(eps);
  }
  return eps;
}

struct DualAverage {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  double eps0 = 1.0;
  int m = 0;

  void init(double eps) {
    eps0 = eps;
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    m = 0;
  }
  void update(double accept, double target_accept) {
    ++m;
    double frac = 1.0 / (m + kDaT0);
    h_bar = (1.0 - frac) * h_bar + frac * (target_accept - accept);
    log_eps = mu - std::sqrt(static_cast<double>(m)) / kDaGamma * h_bar;
    double eta = std::pow(static_cast<double>(m), -kDaKappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
  }
  double eps() const { return m > 0 ? std::exp(log_eps) : eps0; }
  double eps_bar() const { return m > 0 ? std::exp(log_eps_bar) : eps0; }
};

struct ChainOutput {
  Eigen::MatrixXd draws;  // draws x dim
  int divergences = 0;
  double step_size = 0.0;
};

ChainOutput run_chain(const Target& target, const Eigen::VectorXd& init, const NutsConfig& config, int chain) {
  Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(chain));
  Eigen::Index dim = init.size();

  TargetEval eval = target(init);
  if (!std::isfinite(eval.logp) || !eval.grad.allFinite())
    throw Error::at("chain {}: target non-finite at the initial point", chain);
  Eigen::VectorXd theta = init;
  Eigen::VectorXd grad = eval.grad;
  double logp = eval.logp;

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(dim);
  DualAverage da;
  da.init(find_reasonable_epsilon(target, theta, logp, grad, inv_mass, rng));

  int w1 = config.burn_in / 4;
  int w2 = config.burn_in / 2;
  int w3 = config.burn_in - w1 - w2;

  auto adapt_step = [&]() {
    Transition t = nuts_transition(target, theta, logp, grad, da.eps(), inv_mass, rng, config.max_tree_depth);
    theta = t.theta;
    grad = t.grad;
    logp = t.logp;
    da.update(t.accept_stat, config.target_accept);
  };

  for (int i = 0; i < w1; ++i) adapt_step();

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < w2; ++i) {
    adapt_step();
    Eigen::VectorXd delta = theta - mean;
    mean += delta / (i + 1.0);
    m2 += delta.cwiseProduct(theta - mean);
  }
  if (w2 > 1) {
    double n = static_cast<double>(w2);
    Eigen::VectorXd var = m2 / (n - 1.0);
    // Shrink toward a small diagonal, as a short window's variance is noisy.
    inv_mass = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
    da.init(find_reasonable_epsilon(target, theta, logp, grad, inv_mass, rng));
  }

  for (int i = 0; i < w3; ++i) adapt_step();

  double eps = da.eps_bar();

  ChainOutput out;
  out.step_size = eps;
  out.draws.resize(config.draws, dim);
  for (int i = 0; i < config.draws; ++i) {
    Transition t = nuts_transition(target, theta, logp, grad, eps, inv_mass, rng, config.max_tree_depth);
    theta = t.theta;
    grad = t.grad;
    logp = t.logp;
    if (t.divergent) ++out.divergences;
    out.draws.row(i) = theta.transpose();
  }
  return out;
}

}  // namespace

NutsResult run_nuts(const Target& target, const std::vector<Eigen::VectorXd>& inits, const NutsConfig& config) {
  if (config.chains < 1) throw Error::at("chain count {} must be positive", config.chains);
  if (config.draws < 1) throw Error::at("draw count {} must be positive", config.draws);
  if (config.burn_in < 0) throw Error::at("burn-in {} must be non-negative", config.burn_in);
  if (config.max_tree_depth < 1 || config.max_tree_depth > 14)
    throw Error::at("max tree depth {} outside [1, 14]", config.max_tree_depth);
  if (!(config.target_accept > 0.0 && config.target_accept < 1.0))
    throw Error::at("target acceptance {} outside (0, 1)", config.target_accept);
  if (inits.size() != static_cast<std::size_t>(config.chains))
    throw Error::at("{} initial points for {} chains", inits.size(), config.chains);
  Eigen::Index dim = inits[0].size();
  if (dim < 1) throw Error("initial points are empty");
  for (const auto& init : inits)
    if (init.size() != dim) throw Error("initial points differ in dimension");

  std::vector<ChainOutput> outputs(static_cast<std::size_t>(config.chains));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.chains));

  int jobs = std::max(1, config.jobs);
  jobs = std::min(jobs, config.chains);
  auto worker = [&](int start) {
    for (int c = start; c < config.chains; c += jobs) {
      try {
        outputs[static_cast<std::size_t>(c)] = run_chain(target, inits[static_cast<std::size_t>(c)], config, c);
      } catch (...) {
        failures[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
    for (auto& thread : threads) thread.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  NutsResult result;
  result.draws.assign(static_cast<std::size_t>(dim), Eigen::MatrixXd(config.chains, config.draws));
  for (int c = 0; c < config.chains; ++c) {
    const ChainOutput& out = outputs[static_cast<std::size_t>(c)];
    result.divergences += out.divergences;
    result.step_sizes.push_back(out.step_size);
    for (Eigen::Index p = 0; p < dim; ++p)
      result.draws[static_cast<std::size_t>(p)].row(c) = out.draws.col(p).transpose();
  }
  result.total_transitions = config.chains * config.draws;
  return result;
}

}  // namespace stormlens::bayes
