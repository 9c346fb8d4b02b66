#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "vai/adversary.hpp"
#include "vai/select.hpp"

namespace vai {

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sample Pearson correlation. Throws UndefinedCorrelation when either side has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// `count` random subsets with sizes spread over 1..max_k so predictions differ.
std::vector<AttackSet> correlation_subsets(std::size_t num_agents, std::size_t count, std::size_t max_k,
                                           std::uint64_t seed);

struct CorrelationResult {
  double r = 0.0;
  std::vector<AttackSet> subsets;
  std::vector<double> predicted_drop;
  std::vector<double> realized_return;
};

/// Pairs each subset's predicted value drop with the victim return under a trained adversary.
CorrelationResult correlate_prediction_vs_attack(const SelectionContext& ctx, Environment& env, const Policy& victim,
                                                 std::span<const AttackSet> subsets, double eps,
                                                 const AdversaryTrainingConfig& adversary, std::size_t episodes,
                                                 std::uint64_t seed);

/// Columns: subset, predicted_drop, realized_return.
void write_correlation_csv(const std::filesystem::path& path, const CorrelationResult& result);

enum class HeatmapMode {
  PerAgentEps,        // V(s_i, mu, 0, 0) - V(s_i, mu, 1, 0)
  SingleAdversaryXi,  // V(s_i, mu, 0, 0) - V(s_i, mu, 0, 1/N)
};

/// rows x cols grid over the agent layout; agent i sits at (i / cols, i % cols).
/// Cells without an agent are NaN.
std::vector<std::vector<double>> export_heatmap(const SelectionContext& ctx, AgentLayout layout, HeatmapMode mode);

/// Cells without an agent are written empty.
void write_heatmap_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& grid);

}  // namespace vai
