#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vai/core.hpp"
#include "vai/linear.hpp"

namespace vai {

enum class Backend { Tabular, Linear };

std::string to_string(Backend b);
Backend parse_backend(const std::string& s);

/// Quantizes a mean-field entry in [0,1] into `levels` bins on a square-root scale.
std::size_t mf_level(double x, std::size_t levels);

struct QModelSpec {
  Backend backend = Backend::Tabular;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t mf_levels = 4;
  double gamma = 0.95;

  void validate() const;
  friend bool operator==(const QModelSpec&, const QModelSpec&) = default;
};

/// Q(s, a, mu, nu), shared by all agents.
///
/// Tabular: one cell per (s, a, level(mu[s]), level(nu[a])).
/// Linear: weights over [one-hot(s) x one-hot(a), mu, nu, 1].
class QModel {
 public:
  QModel() = default;
  explicit QModel(QModelSpec spec);

  const QModelSpec& spec() const { return spec_; }
  std::size_t dimension() const { return fn_.dimension(); }

  void features(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu,
                Features& out) const;
  double value(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu) const;
  std::vector<double> row(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu) const;

  /// One SGD step on (target - Q)^2 / 2.
  void update(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu, double target,
              double lr);

  std::span<const double> weights() const { return fn_.weights(); }
  void set_weights(std::vector<double> w) { fn_.set_weights(std::move(w)); }

  void save(const std::filesystem::path& path) const;
  static QModel load(const std::filesystem::path& path);

 private:
  QModelSpec spec_;
  LinearFunction fn_;
};

}  // namespace vai
