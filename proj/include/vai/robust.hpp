#pragma once

#include <filesystem>
#include <vector>

#include "vai/qmodel.hpp"
#include "vai/rollout.hpp"
#include "vai/toy.hpp"

namespace vai {

/// Which action vector the q-norm of Q ranges over. OwnAction freezes nu at
/// the sample's cooperative field; Joint also ranges over pure mean actions.
enum class NormScope { OwnAction, Joint };

struct RegularizerSpec {
  NormOrder norm;
  NormScope scope = NormScope::OwnAction;

  double p() const { return norm.p; }
  double q() const { return norm.dual(); }
};

/// (eps + xi + eps * xi) * ||Q(s, ., mu, nu_beta)||_q.
double regularizer(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_beta, double eps,
                   double xi, const RegularizerSpec& spec);

/// ||Q(s, ., mu, nu_beta)||_q under the spec's scope.
double q_norm(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_beta,
              const RegularizerSpec& spec);

inline double budget_coefficient(double eps, double xi) { return eps + xi + eps * xi; }

struct RobustValueSpec {
  Backend backend = Backend::Tabular;
  std::size_t num_states = 0;
  std::size_t mf_levels = 4;
  double gamma = 0.95;

  void validate() const;
};

/// V(s, mu, eps, xi) = w(s, mu) . [1, eps, xi, eps * xi].
///
/// The base features w(s, mu) are one cell per (s, level(mu[s])) for the tabular
/// backend and [one-hot(s), mu, 1] for the linear one.
class RobustValueModel {
 public:
  static constexpr std::size_t kBudgetBasis = 4;

  RobustValueModel() = default;
  explicit RobustValueModel(RobustValueSpec spec);

  const RobustValueSpec& spec() const { return spec_; }
  std::size_t base_dimension() const { return base_dim_; }
  std::size_t dimension() const { return fn_.dimension(); }

  void base_features(LocalState s, const MeanFieldState& mu, Features& out) const;
  void features(LocalState s, const MeanFieldState& mu, double eps, double xi, Features& out) const;
  /// eps and xi must lie in [0,1].
  double value(LocalState s, const MeanFieldState& mu, double eps, double xi) const;

  std::span<const double> weights() const { return fn_.weights(); }
  void set_weights(std::vector<double> w) { fn_.set_weights(std::move(w)); }

  /// sup over cells and budgets in [0,1]^2 of |V - other|; the budget basis is
  /// bilinear, so the corners attain it.
  double sup_distance(const RobustValueModel& other) const;

  void save(const std::filesystem::path& path) const;
  static RobustValueModel load(const std::filesystem::path& path);

 private:
  RobustValueSpec spec_;
  std::size_t base_dim_ = 0;
  LinearFunction fn_;
};

/// r + gamma * V(s', mu', eps, xi) - (eps + xi + eps xi) ||Q(s, ., mu, nu)||_q.
double apply_robust_bellman(const RobustValueModel& v, const QModel& q, const Transition& t, double eps, double xi,
                            const RegularizerSpec& spec);

struct CooperativeFitConfig {
  QModelSpec model;
  double ridge = 1e-9;          // per-sample ridge on the LSTD system
  double reward_offset = 0.0;   // added to every reward before fitting
};

/// SARSA-style LSTD: the fixed point of Q = r + gamma Q(s', a', mu', nu') over the corpus.
QModel fit_cooperative_q(std::span<const Episode> episodes, const CooperativeFitConfig& config);

enum class BudgetSampling {
  Hierarchical,  // xi ~ U[0,1], eps ~ Bernoulli(xi)
  Uniform,       // xi, eps ~ U[0,1] independently
};

struct RobustValueConfig {
  Backend backend = Backend::Tabular;
  std::size_t mf_levels = 4;
  double gamma = 0.95;
  RegularizerSpec regularizer;
  BudgetSampling sampling = BudgetSampling::Hierarchical;
  std::size_t budget_draws = 2;  // budget samples per transition
  double ridge = 1e-9;
  double reward_offset = 0.0;

  void validate() const;
};

/// LSTD fixed point of the regularized Bellman target with per-sample budget draws.
RobustValueModel fit_robust_value(std::span<const Episode> episodes, const QModel& q, const RobustValueConfig& config,
                                  std::uint64_t seed);

/// Exact robust values for a toy whose agents follow pi_beta in `mdp`:
/// V0 - (eps + xi + eps xi) W with V0 = (I - gamma P)^-1 r and W = (I - gamma P)^-1 ||Q||_q.
/// Every mean-field level of a state gets the same values.
RobustValueModel exact_robust_value(const TabularMdp& mdp, std::span<const ActionDist> pi_beta, double gamma,
                                    const RegularizerSpec& spec, std::size_t mf_levels = 1);

struct WorstCaseGap {
  double closed_form = 0.0;
  double brute_force = 0.0;
};

/// closed_form = eps xi ||q_row||_q. brute_force maximizes |sum_a x_a y_a q_a| over
/// grid points with ||x||_p <= eps and ||y||_p <= xi.
WorstCaseGap worst_case_gap(std::span<const double> q_row, double eps, double xi, double p, std::size_t grid);

WorstCaseGap worst_case_gap(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu,
                            double eps, double xi, double p, std::size_t grid);

/// Diagnostic dump: agent, eps, xi, value for each agent's initial state on a grid x grid budget lattice.
void write_value_grid_csv(const std::filesystem::path& path, const RobustValueModel& v,
                          std::span<const LocalState> states, const MeanFieldState& mu, std::size_t grid);

}  // namespace vai
