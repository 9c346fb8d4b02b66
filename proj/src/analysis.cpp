#include "vai/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "vai/checkpoint.hpp"

namespace vai {

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidInput("pearson needs equal-length samples");
  if (xs.size() < 2) throw InvalidInput("pearson needs at least two pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("correlation is undefined for a zero-variance sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<AttackSet> correlation_subsets(std::size_t num_agents, std::size_t count, std::size_t max_k,
                                           std::uint64_t seed) {
  if (max_k == 0 || max_k > num_agents) throw InvalidInput("correlation subset size must lie in [1, N]");
  std::vector<AttackSet> out;
  for (std::size_t j = 0; j < count; ++j) {
    // Sizes cycle through 1..max_k so every size is represented.
    const std::size_t k = 1 + j % max_k;
    out.push_back(select_random(num_agents, k, derive_seed(seed, 600 + j)));
  }
  return out;
}

CorrelationResult correlate_prediction_vs_attack(const SelectionContext& ctx, Environment& env, const Policy& victim,
                                                 std::span<const AttackSet> subsets, double eps,
                                                 const AdversaryTrainingConfig& adversary, std::size_t episodes,
                                                 std::uint64_t seed) {
  CorrelationResult out;
  const std::uint64_t eval_seed = derive_seed(seed, 401);
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const auto& set = subsets[j];
    set.validate(ctx.num_agents());
    const Adversary adv = train_adversary(env, victim, set, eps, adversary, derive_seed(seed, 700 + j));
    const auto pi_alpha = adv.policy();
    const auto rep = evaluate_attack(env, victim, pi_alpha.get(), set.ids, eps, episodes,
                                     std::span<const std::uint64_t>(&eval_seed, 1));
    out.subsets.push_back(set);
    out.predicted_drop.push_back(predicted_drop(ctx, budgets_for(ctx.num_agents(), set.ids, eps)));
    out.realized_return.push_back(rep.mean);
  }
  out.r = pearson(out.predicted_drop, out.realized_return);
  return out;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationResult& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subset,predicted_drop,realized_return\n";
  for (std::size_t j = 0; j < result.subsets.size(); ++j) {
    const auto& ids = result.subsets[j].ids;
    for (std::size_t k = 0; k < ids.size(); ++k) out << (k ? ";" : "") << ids[k];
    out << "," << format_real(result.predicted_drop[j]) << "," << format_real(result.realized_return[j]) << "\n";
  }
}

std::vector<std::vector<double>> export_heatmap(const SelectionContext& ctx, AgentLayout layout, HeatmapMode mode) {
  const std::size_t n = ctx.num_agents();
  if (layout.rows * layout.cols < n) throw InvalidInput("agent layout is smaller than the agent count");
  std::vector<std::vector<double>> grid(layout.rows,
                                        std::vector<double>(layout.cols, std::numeric_limits<double>::quiet_NaN()));
  const double eps = mode == HeatmapMode::PerAgentEps ? 1.0 : 0.0;
  const double xi = mode == HeatmapMode::PerAgentEps ? 0.0 : 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = ctx.value->value(ctx.states[i], ctx.mu, 0.0, 0.0);
    grid[i / layout.cols][i % layout.cols] = base - ctx.value->value(ctx.states[i], ctx.mu, eps, xi);
  }
  return grid;
}

void write_heatmap_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& grid) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "row";
  const std::size_t cols = grid.empty() ? 0 : grid.front().size();
  for (std::size_t c = 0; c < cols; ++c) out << ",col_" << c;
  out << "\n";
  for (std::size_t r = 0; r < grid.size(); ++r) {
    out << r;
    for (double v : grid[r]) {
      out << ",";
      if (!std::isnan(v)) out << format_real(v);
    }
    out << "\n";
  }
}

}  // namespace vai
