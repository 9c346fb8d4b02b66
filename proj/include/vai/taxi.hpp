#pragma once

#include "vai/env.hpp"

namespace vai {

/// Supply-demand matching on a torus grid. Taxis move one cell per step
/// (stay, up, down, left, right). Demand is a Poisson draw per zone,
/// concentrated near the grid centre, refreshed every step. The reward is
/// -(1/Z) sum_z |supply share_z - demand share_z|.
class TaxiEnv final : public Environment {
 public:
  explicit TaxiEnv(EnvConfig config);

  std::string name() const override { return "taxi"; }
  std::size_t num_agents() const override { return config_.num_agents; }
  std::size_t state_size() const override { return config_.grid_width * config_.grid_height; }
  std::size_t action_size() const override { return 5; }
  std::size_t horizon() const override { return config_.horizon; }
  AgentLayout layout() const override { return layout_; }

  const EnvSnapshot& reset(std::uint64_t seed) override;
  StepResult step(std::span<const ActionIndex> actions) override;
  const EnvSnapshot& snapshot() const override { return snap_; }
  ObservationGraph graph(double radius) const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<TaxiEnv>(*this); }

  std::size_t num_zones() const { return zones_x_ * zones_y_; }
  std::size_t zone_of(std::size_t cell) const;
  double zone_rate(std::size_t zone) const { return rates_[zone]; }

  /// Reward for a given taxi placement (cells) and per-zone demand counts.
  double matching_reward(std::span<const LocalState> cells, std::span<const std::size_t> demand) const;

  void set_cells(std::span<const LocalState> cells);

 private:
  EnvConfig config_;
  AgentLayout layout_;
  std::size_t zones_x_ = 0;
  std::size_t zones_y_ = 0;
  std::vector<double> rates_;
  std::vector<LocalState> initial_cells_;
  EnvSnapshot snap_;
  std::mt19937_64 rng_;
};

}  // namespace vai
