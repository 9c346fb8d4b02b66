#pragma once

#include "vai/env.hpp"

namespace vai {

/// Vicsek flocking on a torus. Local state is heading sector times the
/// sector of the offset to the neighbourhood mean heading; actions are turn
/// increments {-2, -1, 0, +1, +2} * turn_step. Reward is the order parameter.
class VicsekEnv final : public Environment {
 public:
  explicit VicsekEnv(EnvConfig config);

  std::string name() const override { return "vicsek"; }
  std::size_t num_agents() const override { return config_.num_agents; }
  std::size_t state_size() const override { return config_.heading_bins * config_.bearing_bins; }
  std::size_t action_size() const override { return 5; }
  std::size_t horizon() const override { return config_.horizon; }
  AgentLayout layout() const override;

  const EnvSnapshot& reset(std::uint64_t seed) override;
  StepResult step(std::span<const ActionIndex> actions) override;
  const EnvSnapshot& snapshot() const override { return snap_; }
  ObservationGraph graph(double radius) const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<VicsekEnv>(*this); }

  const EnvConfig& config() const { return config_; }

  /// Replaces the poses (and derived states) directly. Used by tests and analyses.
  void set_poses(std::vector<Pose> poses);

  /// Mean heading of the agents within comm_radius of `agent`, itself included.
  double neighbour_mean_heading(std::size_t agent) const;
  double turn_for(ActionIndex a) const;
  /// Action whose turn is nearest to `desired` (ties go to the smaller turn).
  ActionIndex nearest_turn(double desired) const;

 private:
  void derive_states();

  EnvConfig config_;
  EnvSnapshot snap_;
  std::mt19937_64 rng_;
};

/// |sum_j exp(i theta_j)| / N.
double order_parameter(std::span<const Pose> poses);

/// Rule-based Vicsek action: turn toward the neighbour mean heading with
/// uniform angular noise of width `noise` added before discretization.
ActionIndex vicsek_rule_policy(const VicsekEnv& env, std::size_t agent, double noise, std::mt19937_64& rng);

/// The same alignment rule expressed on the discretized local state.
ActionIndex vicsek_rule_action_for_state(LocalState s, const EnvConfig& config);

}  // namespace vai
