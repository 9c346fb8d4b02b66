#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vai/adversary.hpp"
#include "vai/env.hpp"
#include "vai/robust.hpp"
#include "vai/select.hpp"
#include "vai/victim.hpp"

namespace vai {

/// Error raised while reading a config; the message names the offending field.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct SelectionConfig {
  std::vector<SelectionMethod> methods{SelectionMethod::Greedy, SelectionMethod::Rl, SelectionMethod::Random,
                                       SelectionMethod::DegreeCentrality};
  std::size_t k = 2;
  double eps = 1.0;
  std::size_t random_draws = 1;  // the random baseline is averaged over this many subsets
  double graph_radius = 0.0;     // 0 means the environment's own observation radius
  std::size_t brute_cap = 3000;
  SelectorRlConfig rl;
};

struct EvaluationConfig {
  std::size_t episodes = 20;          // evaluation episodes per attack
  std::size_t corpus_episodes = 200;  // cooperative episodes for value fitting
  std::size_t export_episodes = 5;    // episodes persisted to trajectories.csv
  std::size_t heatmap_grid = 11;      // (eps, xi) lattice of the value grid dump
  std::size_t correlation_subsets = 0;  // 0 skips the correlation stage in full runs
  std::size_t correlation_max_k = 0;  // 0 means N / 2
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvConfig env;
  VictimTrainingConfig victim;
  RobustValueConfig value;
  double q_ridge = 1e-9;
  SelectionConfig selection;
  AdversaryTrainingConfig adversary;
  EvaluationConfig evaluation;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "results";

  void validate() const;

  /// Stable hash of every setting except the output directory.
  std::string experiment_id() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string dump_experiment_config(const ExperimentConfig& config);

}  // namespace vai
