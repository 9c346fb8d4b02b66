#pragma once

#include <random>
#include <vector>

#include "vai/env.hpp"

namespace vai {

/// A finite single-agent MDP used as the local dynamics of decomposable toy systems.
struct TabularMdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transition;  // [s][a][s'] row-major
  std::vector<double> reward;      // [s][a]

  TabularMdp() = default;
  TabularMdp(std::size_t states, std::size_t actions);

  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transition[(s * num_actions + a) * num_states + next];
  }
  double& p(std::size_t s, std::size_t a, std::size_t next) {
    return transition[(s * num_actions + a) * num_states + next];
  }
  double r(std::size_t s, std::size_t a) const { return reward[s * num_actions + a]; }
  double& r(std::size_t s, std::size_t a) { return reward[s * num_actions + a]; }

  void validate() const;
};

struct PolicyValues {
  std::vector<double> v;  // [s]
  std::vector<double> q;  // [s][a]
};

/// Iterative policy evaluation to a sup-norm tolerance.
PolicyValues evaluate_policy(const TabularMdp& mdp, std::span<const ActionDist> policy, double gamma,
                             double tol = 1e-12);

/// Worst-case values when the executed policy is eps * pi_alpha + (1 - eps) * pi_beta
/// and pi_alpha is chosen adversarially.
std::vector<double> adversarial_values(const TabularMdp& mdp, std::span<const ActionDist> pi_beta, double eps,
                                       double gamma, double tol = 1e-12);

/// Greedy (argmin-Q) adversary table from adversarial value iteration.
std::vector<ActionIndex> adversarial_actions(const TabularMdp& mdp, std::span<const ActionDist> pi_beta,
                                             double eps, double gamma);

std::vector<double> optimal_q(const TabularMdp& mdp, double gamma, double tol = 1e-12);

/// Boltzmann policy table over a Q table.
std::vector<ActionDist> boltzmann_table(std::span<const double> q, std::size_t num_actions, double temperature);

/// A toy system: N agents, each running its own copy of `mdp` from a fixed initial state.
struct ToyInstance {
  TabularMdp mdp;
  std::vector<ActionDist> pi_beta;
  std::vector<LocalState> initial_states;
  double gamma = 0.9;
};

/// Random instance where each agent keeps its role (state) for the whole episode,
/// role rewards are uniform in [0,1], and the last action is a zero-reward crash.
ToyInstance make_role_toy(std::mt19937_64& rng, std::size_t num_roles, std::size_t num_actions,
                          std::size_t num_agents, double gamma, double temperature);

/// Exact discounted victim return (mean over agents) when `attacked` run the worst-case adversary.
double toy_attacked_return(const ToyInstance& toy, std::span<const std::size_t> attacked, double eps);

/// Environment wrapper: agents evolve independently; shared reward is the mean of agent rewards.
class ToyEnv final : public Environment {
 public:
  ToyEnv(TabularMdp mdp, std::vector<LocalState> initial_states, std::size_t horizon);

  std::string name() const override { return "toy"; }
  std::size_t num_agents() const override { return initial_.size(); }
  std::size_t state_size() const override { return mdp_.num_states; }
  std::size_t action_size() const override { return mdp_.num_actions; }
  std::size_t horizon() const override { return horizon_; }
  AgentLayout layout() const override { return {1, initial_.size()}; }

  const EnvSnapshot& reset(std::uint64_t seed) override;
  StepResult step(std::span<const ActionIndex> actions) override;
  const EnvSnapshot& snapshot() const override { return snap_; }
  ObservationGraph graph(double radius) const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<ToyEnv>(*this); }

  const TabularMdp& mdp() const { return mdp_; }

 private:
  TabularMdp mdp_;
  std::vector<LocalState> initial_;
  std::size_t horizon_;
  EnvSnapshot snap_;
  std::mt19937_64 rng_;
};

}  // namespace vai
