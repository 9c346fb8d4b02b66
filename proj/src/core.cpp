#include "vai/core.hpp"

#include <algorithm>
#include <numeric>

namespace vai {

double dual_order(double p) {
  if (!(p >= 1.0)) throw InvalidInput("norm order must be >= 1");
  if (p == 1.0) return kInfinity;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

double NormOrder::dual() const { return dual_order(p); }

NormOrder NormOrder::from(double p) {
  if (!(p >= 1.0)) throw InvalidInput("norm order must be >= 1");
  return NormOrder{p};
}

double lp_norm(std::span<const double> v, double p) {
  if (!(p >= 1.0)) throw InvalidInput("norm order must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

BudgetVector::BudgetVector(std::vector<double> eps) : eps_(std::move(eps)) {
  for (double e : eps_)
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidInput("budget entries must lie in [0,1]");
}

void BudgetVector::set(std::size_t agent, double eps) {
  if (agent >= eps_.size()) throw InvalidInput("budget agent index out of range");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("budget entries must lie in [0,1]");
  eps_[agent] = eps;
}

double BudgetVector::xi() const { return eps_.empty() ? 0.0 : aggregate_budget(eps_); }

bool BudgetVector::any() const {
  return std::any_of(eps_.begin(), eps_.end(), [](double e) { return e > 0.0; });
}

BudgetVector budgets_for(std::size_t num_agents, std::span<const std::size_t> attacked, double eps) {
  BudgetVector b(num_agents);
  for (std::size_t id : attacked) b.set(id, eps);
  return b;
}

namespace {

template <class Dist>
Dist counts_to_field(std::span<const std::size_t> items, std::size_t size, const char* what) {
  if (items.empty()) throw InvalidInput(std::string("empty ") + what + " list");
  if (size == 0) throw InvalidInput(std::string(what) + " space must be non-empty");
  std::vector<std::size_t> counts(size, 0);
  for (std::size_t x : items) {
    if (x >= size) throw InvalidInput(std::string(what) + " index out of range");
    ++counts[x];
  }
  const double n = static_cast<double>(items.size());
  std::vector<double> probs(size);
  for (std::size_t i = 0; i < size; ++i) probs[i] = static_cast<double>(counts[i]) / n;
  return Dist(std::move(probs));
}

}  // namespace

MeanFieldState empirical_mean_field_state(std::span<const LocalState> states, std::size_t space_size) {
  return counts_to_field<MeanFieldState>(states, space_size, "state");
}

MeanFieldAction empirical_mean_field_action(std::span<const ActionIndex> actions, std::size_t action_size) {
  return counts_to_field<MeanFieldAction>(actions, action_size, "action");
}

ActionDist mix_policies(const ActionDist& alpha, const ActionDist& beta, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("mixing budget must lie in [0,1]");
  if (alpha.size() != beta.size()) throw InvalidInput("mixed policies must share an action space");
  std::vector<double> out(alpha.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = eps * alpha[a] + (1.0 - eps) * beta[a];
  return ActionDist(std::move(out));
}

double aggregate_budget(std::span<const double> eps) {
  if (eps.empty()) throw InvalidInput("budget vector must be non-empty");
  double total = 0.0;
  for (double e : eps) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidInput("budget entries must lie in [0,1]");
    total += e;
  }
  return total / static_cast<double>(eps.size());
}

double deviation_bound(double eps, double p) {
  const double factor = std::isinf(p) ? 1.0 : std::pow(2.0, 1.0 / p);
  return factor * eps;
}

bool check_deviation_bound(const ActionDist& pi_hat, const ActionDist& pi_beta, double eps, double p) {
  if (pi_hat.size() != pi_beta.size()) throw InvalidInput("policies must share an action space");
  std::vector<double> diff(pi_hat.size());
  for (std::size_t a = 0; a < diff.size(); ++a) diff[a] = pi_hat[a] - pi_beta[a];
  return lp_norm(diff, p) <= deviation_bound(eps, p) + 1e-9;
}

std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding can leave acc slightly below 1; fall back to the last supported index.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

MeanFieldDeviationReport check_mean_field_deviation(std::span<const ActionDist> alpha,
                                                    std::span<const ActionDist> beta,
                                                    const BudgetVector& budgets, double p,
                                                    double delta, std::size_t trials,
                                                    std::mt19937_64& rng) {
  const std::size_t n = beta.size();
  if (n == 0 || alpha.size() != n || budgets.size() != n)
    throw InvalidInput("mean-field deviation check needs one policy pair and budget per agent");
  if (trials == 0) throw InvalidInput("at least one trial required");
  const std::size_t num_actions = beta[0].size();
  const double bound = deviation_bound(budgets.xi(), p) + delta;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<ActionIndex> victim_actions(n), mixed_actions(n);
  MeanFieldDeviationReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const ActionIndex a_beta = sample_index(beta[i].probs(), unif(rng));
      const bool takeover = unif(rng) < budgets[i];
      const double u_alpha = unif(rng);
      victim_actions[i] = a_beta;
      mixed_actions[i] = takeover ? sample_index(alpha[i].probs(), u_alpha) : a_beta;
    }
    const auto nu_beta = empirical_mean_field_action(victim_actions, num_actions);
    const auto nu = empirical_mean_field_action(mixed_actions, num_actions);
    std::vector<double> diff(num_actions);
    for (std::size_t a = 0; a < num_actions; ++a) diff[a] = nu[a] - nu_beta[a];
    if (lp_norm(diff, p) > bound) ++report.violations;
  }
  report.violation_rate = static_cast<double>(report.violations) / static_cast<double>(trials);
  report.hoeffding_bound = 2.0 * std::exp(-2.0 * static_cast<double>(n) * delta * delta);
  return report;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace vai
