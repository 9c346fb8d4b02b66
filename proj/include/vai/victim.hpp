#pragma once

#include <memory>
#include <stdexcept>

#include "vai/env.hpp"
#include "vai/policy.hpp"
#include "vai/qmodel.hpp"

namespace vai {

struct VictimTrainingConfig {
  std::size_t episodes = 2000;
  Backend backend = Backend::Tabular;
  std::size_t mf_levels = 4;
  double gamma = 0.95;
  double learning_rate = 0.1;
  double temperature = 0.1;
  double explore_start = 1.0;
  double explore_end = 0.05;
  std::size_t buffer_capacity = 20000;
  std::size_t batch_size = 64;
  std::size_t eval_episodes = 20;
  double margin = 0.2;  // required relative improvement over the uniform-random policy
  std::size_t select_every = 0;   // 0 keeps the final Q; otherwise score snapshots in the second half
  std::size_t select_episodes = 5;

  void validate() const;
};

/// Thrown when the trained policy does not beat the random baseline by the configured margin.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(double trained_return, double random_return);
  double trained_return;
  double random_return;
};

struct VictimModel {
  std::shared_ptr<const QModel> q;
  double temperature = 0.1;
  double trained_return = 0.0;
  double random_return = 0.0;

  BoltzmannPolicy policy() const { return BoltzmannPolicy(q, temperature); }
};

/// trained - random >= margin * |random|.
bool exceeds_margin(double trained_return, double random_return, double margin);

/// MF-Q with a Boltzmann-expectation target, e-greedy exploration and uniform replay.
/// Deterministic in (configs, seed).
VictimModel train_victim(const EnvConfig& env_config, const VictimTrainingConfig& config, std::uint64_t seed);

/// Same trainer on an existing environment (used for toys).
VictimModel train_victim(Environment& env, const VictimTrainingConfig& config, std::uint64_t seed);

}  // namespace vai
