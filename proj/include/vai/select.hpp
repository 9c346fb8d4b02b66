#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vai/env.hpp"
#include "vai/robust.hpp"

namespace vai {

enum class SelectionMethod { Greedy, Rl, Random, DegreeCentrality, BruteForce };

std::string to_string(SelectionMethod m);
SelectionMethod parse_selection_method(const std::string& s);

struct AttackSet {
  SelectionMethod method = SelectionMethod::Greedy;
  std::vector<std::size_t> ids;
  std::vector<double> step_rewards;  // selector reward of each pick, when the method has one
  std::uint64_t seed = 0;
  bool converged = true;

  /// Throws on duplicates or ids >= num_agents.
  void validate(std::size_t num_agents) const;
  double total_reward() const;

  void write(const std::filesystem::path& path) const;
  static AttackSet read(const std::filesystem::path& path);
};

/// What the selector sees: the initial joint state and initial mean field.
struct SelectionContext {
  const RobustValueModel* value = nullptr;
  std::vector<LocalState> states;
  MeanFieldState mu;

  std::size_t num_agents() const { return states.size(); }
};

SelectionContext make_selection_context(const RobustValueModel& v, const EnvSnapshot& snapshot,
                                        std::size_t state_size);

struct SelectorReward {
  double value = 0.0;
  bool degenerate = false;  // eps_next == eps_prev
};

/// (1/N) sum_i [V(s_i, mu, eps_prev_i, xi_prev) - V(s_i, mu, eps_next_i, xi_next)]: the value drop
/// caused by one new selection. Throws if the budgets differ on more than one agent.
SelectorReward selector_reward(const SelectionContext& ctx, const BudgetVector& eps_prev, const BudgetVector& eps_next);

/// Total drop from zero budgets to `budgets`.
double predicted_drop(const SelectionContext& ctx, const BudgetVector& budgets);

/// K rounds of argmax selector reward, ties to the lowest id.
AttackSet select_greedy(const SelectionContext& ctx, std::size_t k, double eps_value);

struct SelectorRlConfig {
  std::size_t episodes = 400;
  double learning_rate = 0.05;
  double explore_start = 1.0;
  double explore_end = 0.05;
  std::size_t buffer_capacity = 5000;
  std::size_t batch_size = 32;
  /// Converged when the greedy selection has not changed over this many final episodes.
  std::size_t stable_episodes = 50;

  void validate() const;
};

/// Linear Q(s, eps, n) over [one-hot(s_n), xi, eps_n, count / K, 1].
class SelectorQModel {
 public:
  SelectorQModel() = default;
  SelectorQModel(std::size_t num_states, std::size_t k);

  double value(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count, std::size_t candidate) const;
  void update(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count, std::size_t candidate,
              double target, double lr);
  /// Unselected candidate with the largest Q, ties to the lowest id.
  std::size_t best(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count) const;
  std::span<const double> weights() const { return w_; }

 private:
  void features(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count, std::size_t candidate,
                std::vector<double>& out) const;
  std::size_t num_states_ = 0;
  std::size_t k_ = 1;
  std::vector<double> w_;
};

struct RlSelection {
  AttackSet set;
  SelectorQModel q;
};

/// Q-learning over the selection MDP with replay. Returns the greedy set under the learned Q,
/// or the best set seen (with converged = false) when the greedy set never stabilized.
RlSelection select_rl(const SelectionContext& ctx, std::size_t k, double eps_value, const SelectorRlConfig& config,
                      std::uint64_t seed);

AttackSet select_random(std::size_t num_agents, std::size_t k, std::uint64_t seed);

/// Top-K by degree, ties to the lowest id.
AttackSet select_degree_centrality(const ObservationGraph& graph, std::size_t k);

struct SubsetScore {
  std::vector<std::size_t> subset;
  double victim_return = 0.0;
  double std = 0.0;
};

using SubsetScorer = std::function<SubsetScore(std::span<const std::size_t>)>;

struct BruteForceResult {
  AttackSet set;
  std::vector<SubsetScore> scores;
};

std::size_t binomial(std::size_t n, std::size_t k);

/// Scores every K-subset in lexicographic order and keeps the one with the lowest
/// victim return (first one on ties). Refuses when C(N, K) > cap.
BruteForceResult select_bruteforce(std::size_t num_agents, std::size_t k, const SubsetScorer& scorer,
                                   std::size_t cap = 3000);

/// Columns: subset (ids joined by ';'), victim_return, std.
void write_score_table_csv(const std::filesystem::path& path, std::span<const SubsetScore> scores);

}  // namespace vai
