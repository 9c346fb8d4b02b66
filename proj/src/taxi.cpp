#include "vai/taxi.hpp"

#include <algorithm>
#include <cmath>

namespace vai {

TaxiEnv::TaxiEnv(EnvConfig config) : config_(std::move(config)) {
  config_.env_name = "taxi";
  config_.validate();
  const std::size_t w = config_.grid_width, h = config_.grid_height, n = config_.num_agents;

  // Spread taxis over a lattice with the grid's aspect ratio.
  std::size_t cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n) * static_cast<double>(w) / static_cast<double>(h))));
  cols = std::clamp<std::size_t>(cols, 1, w);
  std::size_t rows = (n + cols - 1) / cols;
  if (rows > h) throw InvalidInput("env.num_agents exceeds grid capacity");
  layout_ = {rows, cols};
  initial_cells_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = k / cols, c = k % cols;
    const auto y = static_cast<std::size_t>((static_cast<double>(r) + 0.5) * static_cast<double>(h) / static_cast<double>(rows));
    const auto x = static_cast<std::size_t>((static_cast<double>(c) + 0.5) * static_cast<double>(w) / static_cast<double>(cols));
    initial_cells_[k] = std::min(y, h - 1) * w + std::min(x, w - 1);
  }

  const std::size_t zs = config_.zone_size;
  zones_x_ = (w + zs - 1) / zs;
  zones_y_ = (h + zs - 1) / zs;
  rates_.resize(zones_x_ * zones_y_);
  const double cx = static_cast<double>(w) / 2.0, cy = static_cast<double>(h) / 2.0;
  const double two_sigma_sq = 2.0 * config_.demand_spread * config_.demand_spread;
  for (std::size_t zy = 0; zy < zones_y_; ++zy) {
    for (std::size_t zx = 0; zx < zones_x_; ++zx) {
      const double mx = (static_cast<double>(zx) + 0.5) * static_cast<double>(zs);
      const double my = (static_cast<double>(zy) + 0.5) * static_cast<double>(zs);
      const double d2 = (mx - cx) * (mx - cx) + (my - cy) * (my - cy);
      rates_[zy * zones_x_ + zx] = config_.demand_rate * std::exp(-d2 / two_sigma_sq);
    }
  }
  reset(config_.seed);
}

std::size_t TaxiEnv::zone_of(std::size_t cell) const {
  const std::size_t x = cell % config_.grid_width, y = cell / config_.grid_width;
  return (y / config_.zone_size) * zones_x_ + x / config_.zone_size;
}

void TaxiEnv::set_cells(std::span<const LocalState> cells) {
  if (cells.size() != config_.num_agents) throw InvalidInput("cell count must equal num_agents");
  snap_.states.assign(cells.begin(), cells.end());
  snap_.poses.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] >= state_size()) throw InvalidInput("cell index out of range");
    snap_.poses[i] = Pose{static_cast<double>(cells[i] % config_.grid_width) + 0.5,
                          static_cast<double>(cells[i] / config_.grid_width) + 0.5, 0.0};
  }
}

const EnvSnapshot& TaxiEnv::reset(std::uint64_t seed) {
  set_cells(initial_cells_);
  snap_.step = 0;
  rng_.seed(derive_seed(seed, 0x7a71));
  return snap_;
}

double TaxiEnv::matching_reward(std::span<const LocalState> cells, std::span<const std::size_t> demand) const {
  const std::size_t z = num_zones();
  if (demand.size() != z) throw InvalidInput("demand vector must have one entry per zone");
  std::vector<double> supply(z, 0.0);
  for (LocalState c : cells) supply[zone_of(c)] += 1.0;
  double total_demand = 0.0;
  for (std::size_t d : demand) total_demand += static_cast<double>(d);
  const double n = static_cast<double>(cells.size());
  double mismatch = 0.0;
  for (std::size_t k = 0; k < z; ++k) {
    const double share_d = total_demand > 0.0 ? static_cast<double>(demand[k]) / total_demand : 0.0;
    mismatch += std::abs(supply[k] / n - share_d);
  }
  return -mismatch / static_cast<double>(z);
}

StepResult TaxiEnv::step(std::span<const ActionIndex> actions) {
  check_actions(actions);
  const std::size_t w = config_.grid_width, h = config_.grid_height;
  std::vector<LocalState> cells = snap_.states;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::size_t x = cells[i] % w, y = cells[i] / w;
    switch (actions[i]) {
      case 1: y = (y + h - 1) % h; break;
      case 2: y = (y + 1) % h; break;
      case 3: x = (x + w - 1) % w; break;
      case 4: x = (x + 1) % w; break;
      default: break;
    }
    cells[i] = y * w + x;
  }
  std::vector<std::size_t> demand(num_zones());
  for (std::size_t k = 0; k < demand.size(); ++k) {
    std::poisson_distribution<std::size_t> draw(rates_[k]);
    demand[k] = rates_[k] > 0.0 ? draw(rng_) : 0;
  }
  const std::size_t step_no = snap_.step + 1;
  set_cells(cells);
  snap_.step = step_no;

  StepResult out;
  out.states = snap_.states;
  out.reward = matching_reward(snap_.states, demand);
  out.mu = empirical_mean_field_state(snap_.states, state_size());
  out.nu = empirical_mean_field_action(actions, action_size());
  return out;
}

ObservationGraph TaxiEnv::graph(double radius) const {
  return observation_graph(snap_, radius, static_cast<double>(config_.grid_width),
                           static_cast<double>(config_.grid_height));
}

}  // namespace vai
