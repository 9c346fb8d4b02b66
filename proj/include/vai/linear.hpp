#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vai {

struct Feature {
  std::uint32_t index;
  double value;
};

using Features = std::vector<Feature>;

/// Weights over a sparse feature space. Tabular models are the special case
/// of a single unit feature per input.
class LinearFunction {
 public:
  LinearFunction() = default;
  explicit LinearFunction(std::size_t dim) : w_(dim, 0.0) {}

  std::size_t dimension() const { return w_.size(); }
  double eval(std::span<const Feature> phi) const {
    double v = 0.0;
    for (const auto& f : phi) v += w_[f.index] * f.value;
    return v;
  }
  void add(std::span<const Feature> phi, double step) {
    for (const auto& f : phi) w_[f.index] += step * f.value;
  }

  std::span<const double> weights() const { return w_; }
  std::span<double> weights() { return w_; }
  void set_weights(std::vector<double> w);

 private:
  std::vector<double> w_;
};

/// Least-squares temporal difference: accumulates
///   A += phi (phi - gamma phi')^T,  b += phi * c
/// and solves (A + ridge I) w = b for the TD fixed point.
class LstdSystem {
 public:
  explicit LstdSystem(std::size_t dim);
  ~LstdSystem();
  LstdSystem(const LstdSystem&) = delete;
  LstdSystem& operator=(const LstdSystem&) = delete;

  void add(std::span<const Feature> phi, std::span<const Feature> phi_next, double gamma, double c);
  std::vector<double> solve(double ridge) const;
  std::size_t samples() const { return samples_; }

 private:
  struct Impl;
  Impl* impl_;
  std::size_t samples_ = 0;
};

}  // namespace vai
