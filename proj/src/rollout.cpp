#include "vai/rollout.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "vai/checkpoint.hpp"

namespace vai {

Episode rollout(Environment& env, std::span<const Policy* const> victims, const Policy* adversary,
                const BudgetVector& budgets, std::size_t horizon, std::uint64_t seed) {
  const std::size_t n = env.num_agents();
  if (victims.size() != n) throw InvalidInput("rollout needs one victim policy per agent");
  if (budgets.size() != n) throw InvalidInput("rollout needs one budget per agent");
  if (budgets.any() && adversary == nullptr) throw InvalidInput("non-zero budgets need an adversary policy");

  env.reset(derive_seed(seed, 1));
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::size_t steps = std::min(horizon, env.horizon());
  Episode episode;
  episode.reserve(steps);
  std::vector<LocalState> states = env.snapshot().states;
  MeanFieldState mu = env.mean_field();
  MeanFieldAction nu_prev = MeanFieldAction::uniform(env.action_size());
  std::vector<ActionIndex> actions(n);

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const ActionDist beta = victims[i]->distribution(states[i], mu, nu_prev);
      if (budgets[i] > 0.0) {
        const ActionDist mixed = mix_policies(adversary->distribution(states[i], mu, nu_prev), beta, budgets[i]);
        actions[i] = sample_index(mixed.probs(), unif(rng));
      } else {
        actions[i] = sample_index(beta.probs(), unif(rng));
      }
    }
    StepResult res = env.step(actions);
    TrajectoryStep rec{states, actions, mu, res.nu, res.reward, std::move(res.agent_rewards)};
    nu_prev = rec.nu;
    episode.push_back(std::move(rec));
    states = std::move(res.states);
    mu = std::move(res.mu);
  }
  return episode;
}

Episode rollout(Environment& env, const Policy& victim, const Policy* adversary, const BudgetVector& budgets,
                std::size_t horizon, std::uint64_t seed) {
  std::vector<const Policy*> victims(env.num_agents(), &victim);
  return rollout(env, victims, adversary, budgets, horizon, seed);
}

double episode_return(const Episode& episode) {
  double total = 0.0;
  for (const auto& step : episode) total += step.reward;
  return total;
}

std::vector<Episode> collect_episodes(Environment& env, const Policy& victim, std::size_t count, std::uint64_t seed) {
  std::vector<Episode> out;
  out.reserve(count);
  const BudgetVector none(env.num_agents());
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(rollout(env, victim, nullptr, none, env.horizon(), derive_seed(seed, k)));
  return out;
}

std::vector<double> episode_returns(Environment& env, const Policy& victim, const Policy* adversary,
                                    const BudgetVector& budgets, std::size_t episodes, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(episodes);
  for (std::size_t k = 0; k < episodes; ++k)
    out.push_back(episode_return(rollout(env, victim, adversary, budgets, env.horizon(), derive_seed(seed, k))));
  return out;
}

void for_each_transition(std::span<const Episode> episodes, const std::function<void(const Transition&)>& f) {
  for (const auto& ep : episodes) {
    for (std::size_t t = 0; t + 1 < ep.size(); ++t) {
      const auto& cur = ep[t];
      const auto& nxt = ep[t + 1];
      for (std::size_t i = 0; i < cur.states.size(); ++i) {
        f(Transition{cur.states[i], cur.actions[i], &cur.mu, &cur.nu, cur.reward_for(i), nxt.states[i],
                     nxt.actions[i], &nxt.mu, &nxt.nu});
      }
    }
  }
}

std::size_t count_transitions(std::span<const Episode> episodes) {
  std::size_t n = 0;
  for (const auto& ep : episodes)
    if (ep.size() > 1) n += (ep.size() - 1) * ep.front().states.size();
  return n;
}

void write_trajectories_csv(const std::filesystem::path& path, std::span<const Episode> episodes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::size_t ns = 0, na = 0;
  for (const auto& ep : episodes)
    if (!ep.empty()) {
      ns = ep.front().mu.size();
      na = ep.front().nu.size();
      break;
    }
  out << "episode,step,agent_id,s,a,reward,agent_reward";
  for (std::size_t j = 0; j < ns; ++j) out << ",mu_" << j;
  for (std::size_t j = 0; j < na; ++j) out << ",nu_" << j;
  out << "\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (std::size_t t = 0; t < episodes[e].size(); ++t) {
      const auto& st = episodes[e][t];
      std::ostringstream fields;
      for (double m : st.mu.probs()) fields << "," << format_real(m);
      for (double v : st.nu.probs()) fields << "," << format_real(v);
      const std::string tail = fields.str();
      for (std::size_t i = 0; i < st.states.size(); ++i) {
        out << e << "," << t << "," << i << "," << st.states[i] << "," << st.actions[i] << ","
            << format_real(st.reward) << "," << format_real(st.reward_for(i)) << tail << "\n";
      }
    }
  }
}

std::vector<Episode> read_trajectories_csv(const std::filesystem::path& path, std::size_t state_size,
                                           std::size_t action_size) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  struct Row {
    std::size_t agent;
    LocalState s;
    ActionIndex a;
    double reward, agent_reward;
    std::vector<double> mu, nu;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Row>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7 + state_size + action_size) throw InvalidInput("trajectory CSV row has wrong width");
    Row r;
    const std::size_t e = std::stoul(cells[0]), t = std::stoul(cells[1]);
    r.agent = std::stoul(cells[2]);
    r.s = std::stoul(cells[3]);
    r.a = std::stoul(cells[4]);
    r.reward = std::stod(cells[5]);
    r.agent_reward = std::stod(cells[6]);
    for (std::size_t j = 0; j < state_size; ++j) r.mu.push_back(std::stod(cells[7 + j]));
    for (std::size_t j = 0; j < action_size; ++j) r.nu.push_back(std::stod(cells[7 + state_size + j]));
    rows[{e, t}].push_back(std::move(r));
  }

  std::vector<Episode> out;
  for (auto& [key, agents] : rows) {
    const auto [e, t] = key;
    if (e >= out.size()) out.resize(e + 1);
    if (t != out[e].size()) throw InvalidInput("trajectory CSV steps are not contiguous");
    std::sort(agents.begin(), agents.end(), [](const Row& x, const Row& y) { return x.agent < y.agent; });
    TrajectoryStep st;
    bool decomposed = false;
    for (const auto& r : agents) {
      st.states.push_back(r.s);
      st.actions.push_back(r.a);
      st.agent_rewards.push_back(r.agent_reward);
      decomposed = decomposed || r.agent_reward != r.reward;
    }
    st.reward = agents.front().reward;
    if (!decomposed) st.agent_rewards.clear();
    // Mean fields are recomputed exactly; the stored columns must agree with them.
    st.mu = empirical_mean_field_state(st.states, state_size);
    st.nu = empirical_mean_field_action(st.actions, action_size);
    for (std::size_t j = 0; j < state_size; ++j)
      if (std::abs(st.mu[j] - agents.front().mu[j]) > 1e-8) throw InvalidInput("stored mu disagrees with states");
    for (std::size_t j = 0; j < action_size; ++j)
      if (std::abs(st.nu[j] - agents.front().nu[j]) > 1e-8) throw InvalidInput("stored nu disagrees with actions");
    out[e].push_back(std::move(st));
  }
  return out;
}

}  // namespace vai
