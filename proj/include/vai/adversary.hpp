#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vai/env.hpp"
#include "vai/policy.hpp"
#include "vai/qmodel.hpp"
#include "vai/select.hpp"

namespace vai {

struct AdversaryTrainingConfig {
  std::size_t episodes = 300;
  Backend backend = Backend::Tabular;
  std::size_t mf_levels = 4;
  double gamma = 0.95;
  double learning_rate = 0.1;
  double explore_start = 1.0;
  double explore_end = 0.05;
  std::size_t buffer_capacity = 20000;
  std::size_t batch_size = 64;

  void validate() const;
};

/// pi_alpha: greedy in a Q model of the negated shared reward. An empty model
/// is the no-op adversary (nothing is attacked).
struct Adversary {
  std::shared_ptr<const QModel> q;
  bool noop = false;
  std::string warning;

  std::unique_ptr<Policy> policy() const;
};

/// Trains one shared adversary for the agents in `attack_set`. At each decision an
/// attacked agent acts from the adversary with probability eps and from the victim
/// otherwise. The adversary sees only its agents' (s, mu, nu, r) and its own coin flips.
Adversary train_adversary(Environment& env, const Policy& victim, const AttackSet& attack_set, double eps,
                          const AdversaryTrainingConfig& config, std::uint64_t seed);

struct AttackEvalReport {
  std::vector<std::size_t> attack_set;
  double eps = 0.0;
  std::size_t episodes = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> returns;           // all attacked episodes, seed-major
  std::vector<double> seed_means;        // attacked mean per seed
  std::vector<double> baseline_returns;  // cooperative episodes with identical seeds
  std::vector<double> baseline_seed_means;
  double mean = 0.0;
  double std = 0.0;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;

  /// sqrt((std^2 + baseline_std^2) / 2).
  double pooled_std() const;
};

/// Episode k of seed s uses episode seed derive_seed(s, k) for both the attacked
/// and the cooperative run. `adversary` may be null only for an empty set or eps = 0.
AttackEvalReport evaluate_attack(Environment& env, const Policy& victim, const Policy* adversary,
                                 std::span<const std::size_t> attack_set, double eps, std::size_t episodes,
                                 std::span<const std::uint64_t> seeds);

/// Appends one row per seed: env, N, K, eps, method, seed, mean, baseline_mean, pooled_std.
void append_attack_results_csv(const std::filesystem::path& path, const std::string& env_name,
                               std::size_t num_agents, const std::string& method, const AttackEvalReport& report);

double sample_mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);

}  // namespace vai
