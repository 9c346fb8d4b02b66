#include "vai/env.hpp"

#include <cmath>
#include <numbers>

#include "vai/taxi.hpp"
#include "vai/vicsek.hpp"

namespace vai {

void EnvConfig::validate() const {
  if (num_agents < 2) throw InvalidInput("env.num_agents must be >= 2");
  if (horizon < 1) throw InvalidInput("env.horizon must be >= 1");
  if (env_name == "vicsek") {
    if (!(world_size > 0.0)) throw InvalidInput("env.world_size must be positive");
    if (!(comm_radius > 0.0)) throw InvalidInput("env.comm_radius must be positive");
    if (heading_bins == 0 || bearing_bins == 0) throw InvalidInput("env.heading_bins/bearing_bins must be positive");
    if (!(noise >= 0.0)) throw InvalidInput("env.noise must be non-negative");
  } else if (env_name == "taxi") {
    if (grid_width == 0 || grid_height == 0) throw InvalidInput("env.grid_width/grid_height must be positive");
    if (zone_size == 0) throw InvalidInput("env.zone_size must be positive");
    if (num_agents > grid_width * grid_height)
      throw InvalidInput("env.num_agents exceeds grid capacity (" + std::to_string(grid_width * grid_height) + ")");
    if (!(demand_rate >= 0.0) || !(demand_spread > 0.0)) throw InvalidInput("env demand parameters invalid");
  } else {
    throw InvalidInput("env.env_name must be 'vicsek' or 'taxi' (got '" + env_name + "')");
  }
}

std::size_t ObservationGraph::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n_; ++j) d += adj_[i * n_ + j];
  return d;
}

namespace {

double axis_distance(double a, double b, double extent) {
  double d = std::abs(a - b);
  if (extent > 0.0) d = std::min(d, extent - d);
  return d;
}

}  // namespace

ObservationGraph observation_graph(const EnvSnapshot& snapshot, double radius, double torus_width,
                                   double torus_height) {
  if (!(radius > 0.0)) throw InvalidInput("graph radius must be positive");
  const std::size_t n = snapshot.poses.size();
  ObservationGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = axis_distance(snapshot.poses[i].x, snapshot.poses[j].x, torus_width);
      const double dy = axis_distance(snapshot.poses[i].y, snapshot.poses[j].y, torus_height);
      if (std::sqrt(dx * dx + dy * dy) <= radius) g.connect(i, j);
    }
  }
  return g;
}

void Environment::check_actions(std::span<const ActionIndex> actions) const {
  if (actions.size() != num_agents())
    throw InvalidInput("expected " + std::to_string(num_agents()) + " actions, got " +
                       std::to_string(actions.size()));
  for (ActionIndex a : actions)
    if (a >= action_size()) throw InvalidInput("action index out of range");
  if (snapshot().step >= horizon()) throw InvalidInput("episode already reached its horizon");
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  config.validate();
  if (config.env_name == "vicsek") return std::make_unique<VicsekEnv>(config);
  return std::make_unique<TaxiEnv>(config);
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta <= -std::numbers::pi) theta += two_pi;
  if (theta > std::numbers::pi) theta -= two_pi;
  return theta;
}

}  // namespace vai
