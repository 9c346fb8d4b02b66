#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vai/core.hpp"

namespace vai {

/// Environment parameters. Fields that do not apply to an environment are ignored by it.
struct EnvConfig {
  std::string env_name = "vicsek";
  std::size_t num_agents = 16;
  std::size_t horizon = 40;
  std::uint64_t seed = 1;
  // Initial poses drawn from `seed` once, so agent identities persist across episodes.
  bool fixed_layout = true;

  // Vicsek
  double world_size = 10.0;
  double comm_radius = 3.0;
  double speed = 0.3;
  double noise = 0.1;  // width of uniform heading noise per step (radians)
  double turn_step = 0.39269908169872414;  // pi / 8
  std::size_t heading_bins = 8;
  std::size_t bearing_bins = 8;

  // TaxiGrid
  std::size_t grid_width = 8;
  std::size_t grid_height = 8;
  std::size_t zone_size = 2;
  double demand_rate = 20.0;   // peak Poisson rate per zone
  double demand_spread = 1.5;  // Gaussian falloff (cells) from the grid centre
  double graph_radius = 2.0;   // observation radius in cells

  void validate() const;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct EnvSnapshot {
  std::vector<Pose> poses;
  std::vector<LocalState> states;
  std::size_t step = 0;
};

struct StepResult {
  std::vector<LocalState> states;
  double reward = 0.0;
  MeanFieldState mu;
  MeanFieldAction nu;
  std::vector<double> agent_rewards;
};

/// Rows and columns of the agent layout used for heatmap export.
struct AgentLayout {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

/// Symmetric boolean adjacency with zero diagonal.
class ObservationGraph {
 public:
  explicit ObservationGraph(std::size_t n) : n_(n), adj_(n * n, 0) {}
  std::size_t size() const { return n_; }
  bool edge(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }
  void connect(std::size_t i, std::size_t j) {
    adj_[i * n_ + j] = 1;
    adj_[j * n_ + i] = 1;
  }
  std::size_t degree(std::size_t i) const;

 private:
  std::size_t n_;
  std::vector<unsigned char> adj_;
};

/// Edge iff Euclidean distance <= radius (torus distance when extents are positive).
ObservationGraph observation_graph(const EnvSnapshot& snapshot, double radius, double torus_width = 0.0,
                                   double torus_height = 0.0);

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_agents() const = 0;
  virtual std::size_t state_size() const = 0;
  virtual std::size_t action_size() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual AgentLayout layout() const = 0;

  /// Deterministic for a fixed seed.
  virtual const EnvSnapshot& reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const ActionIndex> actions) = 0;
  virtual const EnvSnapshot& snapshot() const = 0;
  virtual ObservationGraph graph(double radius) const = 0;
  /// Independent copy with identical configuration and state.
  virtual std::unique_ptr<Environment> clone() const = 0;

  MeanFieldState mean_field() const { return empirical_mean_field_state(snapshot().states, state_size()); }

 protected:
  void check_actions(std::span<const ActionIndex> actions) const;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

double wrap_angle(double theta);  // to (-pi, pi]

}  // namespace vai
