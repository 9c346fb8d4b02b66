#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vai {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using LocalState = std::size_t;
using ActionIndex = std::size_t;

inline constexpr double kProbabilityTolerance = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A probability vector over a finite index set. The tag parameter keeps
/// action distributions and the two mean fields from being mixed up.
template <class Tag>
class Distribution {
 public:
  Distribution() = default;

  /// Validates that entries are non-negative and sum to one.
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidInput("distribution must be non-empty");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw InvalidInput("distribution entries must be finite and non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw InvalidInput("distribution must sum to 1 (got " + std::to_string(total) + ")");
  }

  /// Renormalizes raw non-negative weights. Only for construction sites.
  static Distribution normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvalidInput("weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidInput("weights must have positive mass");
    for (double& w : weights) w /= total;
    return Distribution(std::move(weights));
  }

  static Distribution uniform(std::size_t n) {
    if (n == 0) throw InvalidInput("uniform distribution over empty set");
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Distribution point_mass(std::size_t n, std::size_t at) {
    if (at >= n) throw InvalidInput("point mass index out of range");
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return Distribution(std::move(p));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> probs_;
};

using ActionDist = Distribution<struct ActionDistTag>;
using MeanFieldState = Distribution<struct MeanFieldStateTag>;
using MeanFieldAction = Distribution<struct MeanFieldActionTag>;

/// An lp order together with its Hölder conjugate.
struct NormOrder {
  double p = kInfinity;

  double dual() const;
  static NormOrder from(double p);
};

double lp_norm(std::span<const double> v, double p);
double dual_order(double p);

/// Per-agent perturbation budgets. The aggregate is recomputed on demand.
class BudgetVector {
 public:
  BudgetVector() = default;
  explicit BudgetVector(std::size_t num_agents) : eps_(num_agents, 0.0) {}
  explicit BudgetVector(std::vector<double> eps);

  std::size_t size() const { return eps_.size(); }
  double operator[](std::size_t i) const { return eps_[i]; }
  std::span<const double> eps() const { return eps_; }
  void set(std::size_t agent, double eps);
  double xi() const;
  bool any() const;

  friend bool operator==(const BudgetVector&, const BudgetVector&) = default;

 private:
  std::vector<double> eps_;
};

/// Budgets set to `eps` on `attacked` and zero elsewhere.
BudgetVector budgets_for(std::size_t num_agents, std::span<const std::size_t> attacked, double eps);

struct TrajectoryStep {
  std::vector<LocalState> states;
  std::vector<ActionIndex> actions;
  MeanFieldState mu;
  MeanFieldAction nu;
  double reward = 0.0;
  // Optional per-agent reward contributions for decomposable toy systems.
  // Empty means every agent learns from the shared scalar.
  std::vector<double> agent_rewards;

  double reward_for(std::size_t agent) const {
    return agent_rewards.empty() ? reward : agent_rewards[agent];
  }
};

using Episode = std::vector<TrajectoryStep>;

MeanFieldState empirical_mean_field_state(std::span<const LocalState> states, std::size_t space_size);
MeanFieldAction empirical_mean_field_action(std::span<const ActionIndex> actions, std::size_t action_size);

/// eps * alpha + (1 - eps) * beta.
ActionDist mix_policies(const ActionDist& alpha, const ActionDist& beta, double eps);

double aggregate_budget(std::span<const double> eps);

/// True iff ||pi_hat - pi_beta||_p <= 2^{1/p} eps (+1e-9).
bool check_deviation_bound(const ActionDist& pi_hat, const ActionDist& pi_beta, double eps, double p);

double deviation_bound(double eps, double p);

struct MeanFieldDeviationReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  double hoeffding_bound = 0.0;
  bool within_bound() const { return violation_rate <= hoeffding_bound; }
};

/// Monte-Carlo audit of the mean-field concentration bound. Each trial
/// samples one action per agent from pi_beta and, with a coupled draw, from
/// the mixed policy; a violation is ||nu - nu_beta||_p > 2^{1/p} xi + delta.
MeanFieldDeviationReport check_mean_field_deviation(std::span<const ActionDist> alpha,
                                                    std::span<const ActionDist> beta,
                                                    const BudgetVector& budgets, double p,
                                                    double delta, std::size_t trials,
                                                    std::mt19937_64& rng);

/// Samples an index from a distribution using a single uniform draw.
std::size_t sample_index(std::span<const double> probs, double u);

template <class Tag>
std::size_t sample(const Distribution<Tag>& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return sample_index(d.probs(), unif(rng));
}

/// splitmix64 step, used to derive independent child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace vai
