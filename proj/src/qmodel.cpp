#include "vai/qmodel.hpp"

#include <cmath>
#include <sstream>

#include "vai/checkpoint.hpp"

namespace vai {

std::string to_string(Backend b) { return b == Backend::Tabular ? "tabular" : "linear"; }

Backend parse_backend(const std::string& s) {
  if (s == "tabular") return Backend::Tabular;
  if (s == "linear") return Backend::Linear;
  throw InvalidInput("backend must be 'tabular' or 'linear' (got '" + s + "')");
}

std::size_t mf_level(double x, std::size_t levels) {
  if (levels <= 1) return 0;
  const auto l = static_cast<std::size_t>(std::floor(std::sqrt(std::max(0.0, x)) * static_cast<double>(levels)));
  return std::min(l, levels - 1);
}

void QModelSpec::validate() const {
  if (num_states == 0 || num_actions == 0) throw InvalidInput("Q model needs non-empty state and action spaces");
  if (mf_levels == 0) throw InvalidInput("mf_levels must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0,1)");
}

namespace {

std::size_t q_dimension(const QModelSpec& s) {
  if (s.backend == Backend::Tabular) return s.num_states * s.num_actions * s.mf_levels * s.mf_levels;
  return s.num_states * s.num_actions + s.num_states + s.num_actions + 1;
}

}  // namespace

QModel::QModel(QModelSpec spec) : spec_(spec) {
  spec_.validate();
  fn_ = LinearFunction(q_dimension(spec_));
}

void QModel::features(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu,
                      Features& out) const {
  const std::size_t ns = spec_.num_states, na = spec_.num_actions;
  if (s >= ns || a >= na) throw InvalidInput("Q model index out of range");
  if (mu.size() != ns || nu.size() != na) throw InvalidInput("mean-field dimension mismatch");
  out.clear();
  if (spec_.backend == Backend::Tabular) {
    const std::size_t l = spec_.mf_levels;
    const std::size_t cell = ((s * na + a) * l + mf_level(mu[s], l)) * l + mf_level(nu[a], l);
    out.push_back({static_cast<std::uint32_t>(cell), 1.0});
    return;
  }
  out.push_back({static_cast<std::uint32_t>(s * na + a), 1.0});
  const std::size_t mu_base = ns * na;
  for (std::size_t j = 0; j < ns; ++j)
    if (mu[j] != 0.0) out.push_back({static_cast<std::uint32_t>(mu_base + j), mu[j]});
  const std::size_t nu_base = mu_base + ns;
  for (std::size_t j = 0; j < na; ++j)
    if (nu[j] != 0.0) out.push_back({static_cast<std::uint32_t>(nu_base + j), nu[j]});
  out.push_back({static_cast<std::uint32_t>(nu_base + na), 1.0});
}

double QModel::value(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu) const {
  thread_local Features phi;
  features(s, a, mu, nu, phi);
  return fn_.eval(phi);
}

std::vector<double> QModel::row(LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu) const {
  std::vector<double> out(spec_.num_actions);
  for (ActionIndex a = 0; a < out.size(); ++a) out[a] = value(s, a, mu, nu);
  return out;
}

void QModel::update(LocalState s, ActionIndex a, const MeanFieldState& mu, const MeanFieldAction& nu, double target,
                    double lr) {
  thread_local Features phi;
  features(s, a, mu, nu, phi);
  fn_.add(phi, lr * (target - fn_.eval(phi)));
}

void QModel::save(const std::filesystem::path& path) const {
  Checkpoint cp;
  cp.kind = "qmodel";
  cp.put("backend", to_string(spec_.backend));
  std::ostringstream dims;
  dims << spec_.num_states << " " << spec_.num_actions << " " << spec_.mf_levels;
  cp.put("dims", dims.str());
  char g[64];
  std::snprintf(g, sizeof g, "%a", spec_.gamma);
  cp.put("gamma", g);
  auto w = fn_.weights();
  cp.values.assign(w.begin(), w.end());
  cp.write(path);
}

QModel QModel::load(const std::filesystem::path& path) {
  const auto cp = Checkpoint::read(path);
  if (cp.kind != "qmodel") throw InvalidInput("checkpoint kind is '" + cp.kind + "', expected 'qmodel'");
  QModelSpec spec;
  spec.backend = parse_backend(cp.get("backend"));
  std::istringstream dims(cp.get("dims"));
  dims >> spec.num_states >> spec.num_actions >> spec.mf_levels;
  spec.gamma = std::strtod(cp.get("gamma").c_str(), nullptr);
  QModel q(spec);
  q.set_weights(cp.values);
  return q;
}

}  // namespace vai
