#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vai/analysis.hpp"
#include "vai/config.hpp"

namespace vai {

/// A stage was asked to run before the artifacts it consumes exist.
class StageDependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LedgerRow {
  std::string experiment_id;
  std::string stage;
  std::string method;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

/// Append-only CSV: experiment_id, stage, method, seed, metric, value.
class Ledger {
 public:
  explicit Ledger(std::filesystem::path path);

  void append(const LedgerRow& row) const;
  std::vector<LedgerRow> rows() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

enum class Stage { Victim, Value, Select, Attack, Evaluate, Heatmap, Correlate };

std::string to_string(Stage s);

/// Runs the stages for every configured seed. Each stage writes its artifacts
/// under <output_dir>/<experiment_id>/seed-<s>/ and finishes with a marker file;
/// a stage whose marker exists is skipped, so reruns leave the ledger unchanged.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  std::filesystem::path experiment_dir() const;
  std::filesystem::path seed_dir(std::uint64_t seed) const;
  Ledger ledger() const;

  /// Runs one stage. Throws StageDependencyError when an upstream artifact is missing.
  void run(Stage stage, std::uint64_t seed);
  void run(Stage stage);

  /// Victim, value, select, attack, evaluate and heatmap for every seed.
  std::filesystem::path run_all(bool correlate = false);

  bool done(Stage stage, std::uint64_t seed) const;

  /// Metrics recorded in the ledger for this experiment, keyed by "stage/method/metric" per seed.
  std::map<std::string, double> metrics(std::uint64_t seed) const;

 private:
  void victim_stage(std::uint64_t seed);
  void value_stage(std::uint64_t seed);
  void select_stage(std::uint64_t seed);
  void attack_stage(std::uint64_t seed);
  void evaluate_stage(std::uint64_t seed);
  void heatmap_stage(std::uint64_t seed);
  void correlate_stage(std::uint64_t seed);

  void require(Stage upstream, std::uint64_t seed, Stage stage) const;
  void mark(Stage stage, std::uint64_t seed) const;
  void record(Stage stage, const std::string& method, std::uint64_t seed, const std::string& metric,
              double value) const;

  ExperimentConfig config_;
  std::string id_;
};

std::filesystem::path run_pipeline(const std::filesystem::path& config_path);

}  // namespace vai
