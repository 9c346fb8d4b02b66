#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "vai/core.hpp"
#include "vai/env.hpp"
#include "vai/policy.hpp"

namespace vai {

/// Runs one episode. Agent i samples from victims[i] when budgets[i] == 0 and
/// from mix(adversary, victims[i], budgets[i]) otherwise, drawn per decision.
Episode rollout(Environment& env, std::span<const Policy* const> victims, const Policy* adversary,
                const BudgetVector& budgets, std::size_t horizon, std::uint64_t seed);

Episode rollout(Environment& env, const Policy& victim, const Policy* adversary, const BudgetVector& budgets,
                std::size_t horizon, std::uint64_t seed);

double episode_return(const Episode& episode);

/// Cooperative corpus: `count` episodes under the victim with all budgets zero.
std::vector<Episode> collect_episodes(Environment& env, const Policy& victim, std::size_t count, std::uint64_t seed);

/// Per-episode undiscounted returns for episodes seeded derive_seed(seed, k).
std::vector<double> episode_returns(Environment& env, const Policy& victim, const Policy* adversary,
                                    const BudgetVector& budgets, std::size_t episodes, std::uint64_t seed);

/// One agent's transition (s, a, mu, nu, r, s', a', mu', nu') inside an episode.
struct Transition {
  LocalState s;
  ActionIndex a;
  const MeanFieldState* mu;
  const MeanFieldAction* nu;
  double r;
  LocalState s_next;
  ActionIndex a_next;
  const MeanFieldState* mu_next;
  const MeanFieldAction* nu_next;
};

void for_each_transition(std::span<const Episode> episodes, const std::function<void(const Transition&)>& f);
std::size_t count_transitions(std::span<const Episode> episodes);

/// Columns: episode, step, agent_id, s, a, reward, agent_reward, mu_*, nu_*.
void write_trajectories_csv(const std::filesystem::path& path, std::span<const Episode> episodes);
std::vector<Episode> read_trajectories_csv(const std::filesystem::path& path, std::size_t state_size,
                                           std::size_t action_size);

}  // namespace vai
