#include "vai/toy.hpp"

#include <algorithm>
#include <cmath>

namespace vai {

TabularMdp::TabularMdp(std::size_t states, std::size_t actions)
    : num_states(states),
      num_actions(actions),
      transition(states * actions * states, 0.0),
      reward(states * actions, 0.0) {}

void TabularMdp::validate() const {
  if (num_states == 0 || num_actions == 0) throw InvalidInput("tabular MDP must have states and actions");
  if (transition.size() != num_states * num_actions * num_states || reward.size() != num_states * num_actions)
    throw InvalidInput("tabular MDP arrays have the wrong size");
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      double total = 0.0;
      for (std::size_t n = 0; n < num_states; ++n) {
        if (p(s, a, n) < 0.0) throw InvalidInput("negative transition probability");
        total += p(s, a, n);
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance) throw InvalidInput("transition rows must sum to 1");
    }
  }
}

namespace {

void check_policy(const TabularMdp& mdp, std::span<const ActionDist> policy) {
  if (policy.size() != mdp.num_states) throw InvalidInput("policy table needs one distribution per state");
  for (const auto& d : policy)
    if (d.size() != mdp.num_actions) throw InvalidInput("policy action count mismatch");
}

std::vector<double> q_from_v(const TabularMdp& mdp, std::span<const double> v, double gamma) {
  std::vector<double> q(mdp.num_states * mdp.num_actions);
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double next = 0.0;
      for (std::size_t n = 0; n < mdp.num_states; ++n) next += mdp.p(s, a, n) * v[n];
      q[s * mdp.num_actions + a] = mdp.r(s, a) + gamma * next;
    }
  }
  return q;
}

template <class Backup>
std::vector<double> iterate_values(const TabularMdp& mdp, double gamma, double tol, Backup backup) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("discount must lie in [0,1)");
  std::vector<double> v(mdp.num_states, 0.0);
  for (int it = 0; it < 100000; ++it) {
    const auto q = q_from_v(mdp, v, gamma);
    double change = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      const double nv = backup(s, std::span<const double>(q).subspan(s * mdp.num_actions, mdp.num_actions));
      change = std::max(change, std::abs(nv - v[s]));
      v[s] = nv;
    }
    if (change <= tol * (1.0 - gamma)) break;
  }
  return v;
}

}  // namespace

PolicyValues evaluate_policy(const TabularMdp& mdp, std::span<const ActionDist> policy, double gamma, double tol) {
  check_policy(mdp, policy);
  PolicyValues out;
  out.v = iterate_values(mdp, gamma, tol, [&](std::size_t s, std::span<const double> q) {
    double e = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) e += policy[s][a] * q[a];
    return e;
  });
  out.q = q_from_v(mdp, out.v, gamma);
  return out;
}

std::vector<double> adversarial_values(const TabularMdp& mdp, std::span<const ActionDist> pi_beta, double eps,
                                       double gamma, double tol) {
  check_policy(mdp, pi_beta);
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("budget must lie in [0,1]");
  return iterate_values(mdp, gamma, tol, [&](std::size_t s, std::span<const double> q) {
    double victim = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) victim += pi_beta[s][a] * q[a];
    return eps * *std::min_element(q.begin(), q.end()) + (1.0 - eps) * victim;
  });
}

std::vector<ActionIndex> adversarial_actions(const TabularMdp& mdp, std::span<const ActionDist> pi_beta, double eps,
                                             double gamma) {
  const auto v = adversarial_values(mdp, pi_beta, eps, gamma);
  const auto q = q_from_v(mdp, v, gamma);
  std::vector<ActionIndex> out(mdp.num_states);
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    const auto row = std::span<const double>(q).subspan(s * mdp.num_actions, mdp.num_actions);
    out[s] = static_cast<ActionIndex>(std::min_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<double> optimal_q(const TabularMdp& mdp, double gamma, double tol) {
  const auto v = iterate_values(mdp, gamma, tol, [](std::size_t, std::span<const double> q) {
    return *std::max_element(q.begin(), q.end());
  });
  return q_from_v(mdp, v, gamma);
}

std::vector<ActionDist> boltzmann_table(std::span<const double> q, std::size_t num_actions, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("temperature must be positive");
  if (num_actions == 0 || q.size() % num_actions != 0) throw InvalidInput("Q table size mismatch");
  std::vector<ActionDist> out;
  for (std::size_t s = 0; s < q.size() / num_actions; ++s) {
    const auto row = q.subspan(s * num_actions, num_actions);
    const double top = *std::max_element(row.begin(), row.end());
    std::vector<double> w(num_actions);
    for (std::size_t a = 0; a < num_actions; ++a) w[a] = std::exp((row[a] - top) / temperature);
    out.push_back(ActionDist::normalized(std::move(w)));
  }
  return out;
}

ToyInstance make_role_toy(std::mt19937_64& rng, std::size_t num_roles, std::size_t num_actions,
                          std::size_t num_agents, double gamma, double temperature) {
  if (num_actions < 2) throw InvalidInput("role toy needs at least one working action and the crash action");
  ToyInstance toy;
  toy.gamma = gamma;
  toy.mdp = TabularMdp(num_roles, num_actions);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = 0; s < num_roles; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      toy.mdp.p(s, a, s) = 1.0;
      toy.mdp.r(s, a) = a + 1 == num_actions ? 0.0 : unif(rng);
    }
  }
  toy.pi_beta = boltzmann_table(optimal_q(toy.mdp, gamma), num_actions, temperature);
  std::uniform_int_distribution<std::size_t> role(0, num_roles - 1);
  toy.initial_states.resize(num_agents);
  for (auto& s : toy.initial_states) s = role(rng);
  return toy;
}

double toy_attacked_return(const ToyInstance& toy, std::span<const std::size_t> attacked, double eps) {
  const auto victim = evaluate_policy(toy.mdp, toy.pi_beta, toy.gamma).v;
  const auto worst = adversarial_values(toy.mdp, toy.pi_beta, eps, toy.gamma);
  const std::size_t n = toy.initial_states.size();
  std::vector<char> hit(n, 0);
  for (std::size_t id : attacked) {
    if (id >= n) throw InvalidInput("attacked agent id out of range");
    hit[id] = 1;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += hit[i] ? worst[toy.initial_states[i]] : victim[toy.initial_states[i]];
  return total / static_cast<double>(n);
}

ToyEnv::ToyEnv(TabularMdp mdp, std::vector<LocalState> initial_states, std::size_t horizon)
    : mdp_(std::move(mdp)), initial_(std::move(initial_states)), horizon_(horizon) {
  mdp_.validate();
  if (initial_.empty()) throw InvalidInput("toy env needs at least one agent");
  if (horizon_ == 0) throw InvalidInput("horizon must be >= 1");
  for (LocalState s : initial_)
    if (s >= mdp_.num_states) throw InvalidInput("initial state out of range");
  reset(0);
}

const EnvSnapshot& ToyEnv::reset(std::uint64_t seed) {
  snap_.states = initial_;
  snap_.poses.assign(initial_.size(), Pose{});
  for (std::size_t i = 0; i < initial_.size(); ++i) snap_.poses[i].x = static_cast<double>(i);
  snap_.step = 0;
  rng_.seed(derive_seed(seed, 0x70f));
  return snap_;
}

StepResult ToyEnv::step(std::span<const ActionIndex> actions) {
  check_actions(actions);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  StepResult out;
  out.agent_rewards.resize(initial_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < initial_.size(); ++i) {
    const LocalState s = snap_.states[i];
    const ActionIndex a = actions[i];
    out.agent_rewards[i] = mdp_.r(s, a);
    total += out.agent_rewards[i];
    const auto row = std::span<const double>(mdp_.transition).subspan((s * mdp_.num_actions + a) * mdp_.num_states,
                                                                      mdp_.num_states);
    snap_.states[i] = sample_index(row, unif(rng_));
  }
  ++snap_.step;
  out.states = snap_.states;
  out.reward = total / static_cast<double>(initial_.size());
  out.mu = empirical_mean_field_state(snap_.states, state_size());
  out.nu = empirical_mean_field_action(actions, action_size());
  return out;
}

ObservationGraph ToyEnv::graph(double radius) const { return observation_graph(snap_, radius); }

}  // namespace vai
