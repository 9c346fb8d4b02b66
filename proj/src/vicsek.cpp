#include "vai/vicsek.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace vai {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_positive(double theta) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

double wrap_coordinate(double x, double extent) {
  x = std::fmod(x, extent);
  if (x < 0.0) x += extent;
  return x;
}

std::size_t sector(double angle, std::size_t bins) {
  const double width = kTwoPi / static_cast<double>(bins);
  // Sector 0 is centred on angle 0.
  const auto k = static_cast<std::size_t>(std::floor(wrap_positive(angle + width / 2.0) / width));
  return k % bins;
}

}  // namespace

VicsekEnv::VicsekEnv(EnvConfig config) : config_(std::move(config)) {
  config_.env_name = "vicsek";
  config_.validate();
  reset(config_.seed);
}

AgentLayout VicsekEnv::layout() const {
  const std::size_t n = config_.num_agents;
  std::size_t rows = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (rows == 0) rows = 1;
  return {rows, (n + rows - 1) / rows};
}

const EnvSnapshot& VicsekEnv::reset(std::uint64_t seed) {
  std::mt19937_64 layout_rng(config_.fixed_layout ? config_.seed : seed);
  std::uniform_real_distribution<double> pos(0.0, config_.world_size);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  snap_.poses.assign(config_.num_agents, Pose{});
  for (auto& p : snap_.poses) {
    p.x = pos(layout_rng);
    p.y = pos(layout_rng);
    p.heading = ang(layout_rng);
  }
  snap_.step = 0;
  rng_.seed(derive_seed(seed, 0x5eed));
  derive_states();
  return snap_;
}

void VicsekEnv::set_poses(std::vector<Pose> poses) {
  if (poses.size() != config_.num_agents) throw InvalidInput("pose count must equal num_agents");
  snap_.poses = std::move(poses);
  derive_states();
}

double VicsekEnv::neighbour_mean_heading(std::size_t agent) const {
  const auto& me = snap_.poses[agent];
  const double l = config_.world_size;
  double sx = 0.0, sy = 0.0;
  for (const auto& other : snap_.poses) {
    double dx = std::abs(other.x - me.x);
    double dy = std::abs(other.y - me.y);
    dx = std::min(dx, l - dx);
    dy = std::min(dy, l - dy);
    if (dx * dx + dy * dy <= config_.comm_radius * config_.comm_radius) {
      sx += std::cos(other.heading);
      sy += std::sin(other.heading);
    }
  }
  return std::atan2(sy, sx);
}

void VicsekEnv::derive_states() {
  const std::size_t n = config_.num_agents;
  snap_.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = snap_.poses[i].heading;
    const double offset = wrap_angle(neighbour_mean_heading(i) - theta);
    const std::size_t h = sector(theta, config_.heading_bins);
    const std::size_t o = sector(offset, config_.bearing_bins);
    snap_.states[i] = h * config_.bearing_bins + o;
  }
}

double VicsekEnv::turn_for(ActionIndex a) const {
  return (static_cast<double>(a) - 2.0) * config_.turn_step;
}

ActionIndex VicsekEnv::nearest_turn(double desired) const {
  desired = wrap_angle(desired);
  ActionIndex best = 2;
  double best_gap = std::abs(desired);
  for (ActionIndex a : {1, 3, 0, 4}) {
    const double gap = std::abs(desired - turn_for(a));
    if (gap < best_gap - 1e-12) {
      best = a;
      best_gap = gap;
    }
  }
  return best;
}

StepResult VicsekEnv::step(std::span<const ActionIndex> actions) {
  check_actions(actions);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const double l = config_.world_size;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto& p = snap_.poses[i];
    p.heading = wrap_angle(p.heading + turn_for(actions[i]) + config_.noise * unit(rng_));
    p.x = wrap_coordinate(p.x + config_.speed * std::cos(p.heading), l);
    p.y = wrap_coordinate(p.y + config_.speed * std::sin(p.heading), l);
  }
  ++snap_.step;
  derive_states();

  StepResult out;
  out.states = snap_.states;
  out.reward = order_parameter(snap_.poses);
  out.mu = empirical_mean_field_state(snap_.states, state_size());
  out.nu = empirical_mean_field_action(actions, action_size());
  return out;
}

ObservationGraph VicsekEnv::graph(double radius) const {
  return observation_graph(snap_, radius, config_.world_size, config_.world_size);
}

double order_parameter(std::span<const Pose> poses) {
  if (poses.empty()) return 0.0;
  double sx = 0.0, sy = 0.0;
  for (const auto& p : poses) {
    sx += std::cos(p.heading);
    sy += std::sin(p.heading);
  }
  const double phi = std::hypot(sx, sy) / static_cast<double>(poses.size());
  return std::min(1.0, phi);
}

ActionIndex vicsek_rule_policy(const VicsekEnv& env, std::size_t agent, double noise, std::mt19937_64& rng) {
  if (agent >= env.num_agents()) throw InvalidInput("agent id out of range");
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const double jitter = noise > 0.0 ? noise * unit(rng) : 0.0;
  const double desired =
      wrap_angle(env.neighbour_mean_heading(agent) - env.snapshot().poses[agent].heading) + jitter;
  return env.nearest_turn(desired);
}

ActionIndex vicsek_rule_action_for_state(LocalState s, const EnvConfig& config) {
  const std::size_t o = s % config.bearing_bins;
  const double offset = wrap_angle(static_cast<double>(o) * kTwoPi / static_cast<double>(config.bearing_bins));
  ActionIndex best = 2;
  double best_gap = std::abs(offset);
  for (ActionIndex a : {1, 3, 0, 4}) {
    const double gap = std::abs(offset - (static_cast<double>(a) - 2.0) * config.turn_step);
    if (gap < best_gap - 1e-12) {
      best = a;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace vai
