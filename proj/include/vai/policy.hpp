#pragma once

#include <memory>
#include <vector>

#include "vai/core.hpp"
#include "vai/env.hpp"
#include "vai/qmodel.hpp"

namespace vai {

/// A decentralized mean-field policy: local state, current mean field and the
/// previous step's mean-field action are all an agent gets to see.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionDist distribution(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_prev) const = 0;
  virtual std::size_t num_actions() const = 0;
};

/// probs[a] proportional to exp(Q(s, a, mu, nu) / temperature).
ActionDist boltzmann_policy(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu,
                            double temperature);

ActionDist softmax(std::span<const double> values, double temperature);

class BoltzmannPolicy final : public Policy {
 public:
  BoltzmannPolicy(std::shared_ptr<const QModel> q, double temperature);
  ActionDist distribution(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_prev) const override;
  std::size_t num_actions() const override { return q_->spec().num_actions; }
  const QModel& model() const { return *q_; }
  double temperature() const { return temperature_; }

 private:
  std::shared_ptr<const QModel> q_;
  double temperature_;
};

/// Point mass on argmax Q (or argmin when `minimize`), ties to the lowest action.
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(std::shared_ptr<const QModel> q, bool minimize = false)
      : q_(std::move(q)), minimize_(minimize) {}
  ActionDist distribution(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_prev) const override;
  std::size_t num_actions() const override { return q_->spec().num_actions; }

 private:
  std::shared_ptr<const QModel> q_;
  bool minimize_;
};

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(std::size_t num_actions) : n_(num_actions) {}
  ActionDist distribution(LocalState, const MeanFieldState&, const MeanFieldAction&) const override {
    return ActionDist::uniform(n_);
  }
  std::size_t num_actions() const override { return n_; }

 private:
  std::size_t n_;
};

/// Explicit action distribution per local state.
class TablePolicy final : public Policy {
 public:
  explicit TablePolicy(std::vector<ActionDist> table);
  ActionDist distribution(LocalState s, const MeanFieldState&, const MeanFieldAction&) const override;
  std::size_t num_actions() const override { return table_.front().size(); }

 private:
  std::vector<ActionDist> table_;
};

/// The Vicsek alignment rule on discretized local states.
TablePolicy make_vicsek_rule_policy(const EnvConfig& config);

}  // namespace vai
