#include "vai/policy.hpp"

#include <algorithm>
#include <cmath>

#include "vai/vicsek.hpp"

namespace vai {

ActionDist softmax(std::span<const double> values, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("temperature must be positive");
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> w(values.size());
  for (std::size_t a = 0; a < w.size(); ++a) w[a] = std::exp((values[a] - top) / temperature);
  return ActionDist::normalized(std::move(w));
}

ActionDist boltzmann_policy(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu,
                            double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("temperature must be positive");
  return softmax(q.row(s, mu, nu), temperature);
}

BoltzmannPolicy::BoltzmannPolicy(std::shared_ptr<const QModel> q, double temperature)
    : q_(std::move(q)), temperature_(temperature) {
  if (!q_) throw InvalidInput("Boltzmann policy needs a Q model");
  if (!(temperature_ > 0.0)) throw InvalidInput("temperature must be positive");
}

ActionDist BoltzmannPolicy::distribution(LocalState s, const MeanFieldState& mu,
                                         const MeanFieldAction& nu_prev) const {
  return boltzmann_policy(*q_, s, mu, nu_prev, temperature_);
}

ActionDist GreedyPolicy::distribution(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_prev) const {
  const auto row = q_->row(s, mu, nu_prev);
  std::size_t best = 0;
  for (std::size_t a = 1; a < row.size(); ++a)
    if (minimize_ ? row[a] < row[best] : row[a] > row[best]) best = a;
  return ActionDist::point_mass(row.size(), best);
}

TablePolicy::TablePolicy(std::vector<ActionDist> table) : table_(std::move(table)) {
  if (table_.empty()) throw InvalidInput("policy table must be non-empty");
  for (const auto& d : table_)
    if (d.size() != table_.front().size()) throw InvalidInput("policy table rows must share an action space");
}

ActionDist TablePolicy::distribution(LocalState s, const MeanFieldState&, const MeanFieldAction&) const {
  if (s >= table_.size()) throw InvalidInput("local state outside policy table");
  return table_[s];
}

TablePolicy make_vicsek_rule_policy(const EnvConfig& config) {
  std::vector<ActionDist> table;
  const std::size_t states = config.heading_bins * config.bearing_bins;
  for (LocalState s = 0; s < states; ++s)
    table.push_back(ActionDist::point_mass(5, vicsek_rule_action_for_state(s, config)));
  return TablePolicy(std::move(table));
}

}  // namespace vai
