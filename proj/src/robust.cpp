#include "vai/robust.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vai/checkpoint.hpp"
#include "vai/linear.hpp"

namespace vai {

double q_norm(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_beta,
              const RegularizerSpec& spec) {
  if (spec.scope == NormScope::OwnAction) return lp_norm(q.row(s, mu, nu_beta), spec.q());
  const std::size_t na = q.spec().num_actions;
  std::vector<double> joint;
  joint.reserve(na * na);
  for (std::size_t b = 0; b < na; ++b) {
    const auto row = q.row(s, mu, MeanFieldAction::point_mass(na, b));
    joint.insert(joint.end(), row.begin(), row.end());
  }
  return lp_norm(joint, spec.q());
}

double regularizer(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu_beta, double eps,
                   double xi, const RegularizerSpec& spec) {
  const double c = budget_coefficient(eps, xi);
  if (c == 0.0) return 0.0;
  return c * q_norm(q, s, mu, nu_beta, spec);
}

void RobustValueSpec::validate() const {
  if (num_states == 0) throw InvalidInput("robust value model needs a non-empty state space");
  if (mf_levels == 0) throw InvalidInput("mf_levels must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0,1)");
}

RobustValueModel::RobustValueModel(RobustValueSpec spec) : spec_(spec) {
  spec_.validate();
  base_dim_ = spec_.backend == Backend::Tabular ? spec_.num_states * spec_.mf_levels : 2 * spec_.num_states + 1;
  fn_ = LinearFunction(base_dim_ * kBudgetBasis);
}

void RobustValueModel::base_features(LocalState s, const MeanFieldState& mu, Features& out) const {
  const std::size_t ns = spec_.num_states;
  if (s >= ns) throw InvalidInput("local state out of range for value model");
  if (mu.size() != ns) throw InvalidInput("mean-field dimension mismatch for value model");
  out.clear();
  if (spec_.backend == Backend::Tabular) {
    out.push_back({static_cast<std::uint32_t>(s * spec_.mf_levels + mf_level(mu[s], spec_.mf_levels)), 1.0});
    return;
  }
  out.push_back({static_cast<std::uint32_t>(s), 1.0});
  for (std::size_t j = 0; j < ns; ++j)
    if (mu[j] != 0.0) out.push_back({static_cast<std::uint32_t>(ns + j), mu[j]});
  out.push_back({static_cast<std::uint32_t>(2 * ns), 1.0});
}

void RobustValueModel::features(LocalState s, const MeanFieldState& mu, double eps, double xi, Features& out) const {
  if (!(eps >= 0.0 && eps <= 1.0 && xi >= 0.0 && xi <= 1.0)) throw InvalidInput("budgets must lie in [0,1]");
  thread_local Features base;
  base_features(s, mu, base);
  const double g[kBudgetBasis] = {1.0, eps, xi, eps * xi};
  out.clear();
  for (std::size_t k = 0; k < kBudgetBasis; ++k) {
    if (g[k] == 0.0) continue;
    for (const auto& f : base)
      out.push_back({static_cast<std::uint32_t>(k * base_dim_ + f.index), f.value * g[k]});
  }
}

double RobustValueModel::value(LocalState s, const MeanFieldState& mu, double eps, double xi) const {
  thread_local Features phi;
  features(s, mu, eps, xi, phi);
  return fn_.eval(phi);
}

double RobustValueModel::sup_distance(const RobustValueModel& other) const {
  if (dimension() != other.dimension() || spec_.backend != Backend::Tabular || other.spec_.backend != Backend::Tabular)
    throw InvalidInput("sup_distance needs two tabular models of equal shape");
  const auto a = weights(), b = other.weights();
  double best = 0.0;
  for (std::size_t cell = 0; cell < base_dim_; ++cell) {
    for (double eps : {0.0, 1.0}) {
      for (double xi : {0.0, 1.0}) {
        const double g[kBudgetBasis] = {1.0, eps, xi, eps * xi};
        double d = 0.0;
        for (std::size_t k = 0; k < kBudgetBasis; ++k)
          d += (a[k * base_dim_ + cell] - b[k * base_dim_ + cell]) * g[k];
        best = std::max(best, std::abs(d));
      }
    }
  }
  return best;
}

void RobustValueModel::save(const std::filesystem::path& path) const {
  Checkpoint cp;
  cp.kind = "robust_value";
  cp.put("backend", to_string(spec_.backend));
  cp.put("dims", std::to_string(spec_.num_states) + " " + std::to_string(spec_.mf_levels));
  char g[64];
  std::snprintf(g, sizeof g, "%a", spec_.gamma);
  cp.put("gamma", g);
  cp.put("budget_basis", "1 eps xi eps*xi");
  auto w = fn_.weights();
  cp.values.assign(w.begin(), w.end());
  cp.write(path);
}

RobustValueModel RobustValueModel::load(const std::filesystem::path& path) {
  const auto cp = Checkpoint::read(path);
  if (cp.kind != "robust_value") throw InvalidInput("checkpoint kind is '" + cp.kind + "', expected 'robust_value'");
  if (cp.get("budget_basis") != "1 eps xi eps*xi") throw InvalidInput("unsupported budget basis in checkpoint");
  RobustValueSpec spec;
  spec.backend = parse_backend(cp.get("backend"));
  std::istringstream dims(cp.get("dims"));
  dims >> spec.num_states >> spec.mf_levels;
  spec.gamma = std::strtod(cp.get("gamma").c_str(), nullptr);
  RobustValueModel v(spec);
  v.set_weights(cp.values);
  return v;
}

double apply_robust_bellman(const RobustValueModel& v, const QModel& q, const Transition& t, double eps, double xi,
                            const RegularizerSpec& spec) {
  return t.r + v.spec().gamma * v.value(t.s_next, *t.mu_next, eps, xi) - regularizer(q, t.s, *t.mu, *t.nu, eps, xi, spec);
}

namespace {

void check_corpus(std::span<const Episode> episodes, std::size_t num_states, std::size_t num_actions) {
  if (count_transitions(episodes) == 0) throw InvalidInput("trajectory corpus has no transitions");
  for (const auto& ep : episodes)
    for (const auto& st : ep)
      if (st.mu.size() != num_states || st.nu.size() != num_actions)
        throw InvalidInput("trajectory dimensions do not match the model");
}

}  // namespace

QModel fit_cooperative_q(std::span<const Episode> episodes, const CooperativeFitConfig& config) {
  config.model.validate();
  check_corpus(episodes, config.model.num_states, config.model.num_actions);
  QModel q(config.model);
  LstdSystem lstd(q.dimension());
  Features phi, phi_next;
  for_each_transition(episodes, [&](const Transition& t) {
    q.features(t.s, t.a, *t.mu, *t.nu, phi);
    q.features(t.s_next, t.a_next, *t.mu_next, *t.nu_next, phi_next);
    lstd.add(phi, phi_next, config.model.gamma, t.r + config.reward_offset);
  });
  q.set_weights(lstd.solve(config.ridge * static_cast<double>(lstd.samples())));
  return q;
}

void RobustValueConfig::validate() const {
  if (mf_levels == 0) throw InvalidInput("value.mf_levels must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("value.gamma must lie in [0,1)");
  if (!(regularizer.p() >= 1.0)) throw InvalidInput("value.p must be >= 1");
  if (budget_draws == 0) throw InvalidInput("value.budget_draws must be positive");
  if (!(ridge >= 0.0)) throw InvalidInput("value.ridge must be non-negative");
}

RobustValueModel fit_robust_value(std::span<const Episode> episodes, const QModel& q, const RobustValueConfig& config,
                                  std::uint64_t seed) {
  config.validate();
  const std::size_t ns = q.spec().num_states, na = q.spec().num_actions;
  check_corpus(episodes, ns, na);
  RobustValueModel v(RobustValueSpec{config.backend, ns, config.mf_levels, config.gamma});
  LstdSystem lstd(v.dimension());
  std::mt19937_64 rng(derive_seed(seed, 21));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Features phi, phi_next;
  for_each_transition(episodes, [&](const Transition& t) {
    if (t.s >= ns || t.s_next >= ns || t.a >= na) throw InvalidInput("transition index outside the Q model");
    const double norm = q_norm(q, t.s, *t.mu, *t.nu, config.regularizer);
    for (std::size_t d = 0; d < config.budget_draws; ++d) {
      const double xi = unif(rng);
      const double u = unif(rng);
      const double eps = config.sampling == BudgetSampling::Hierarchical ? (u < xi ? 1.0 : 0.0) : u;
      v.features(t.s, *t.mu, eps, xi, phi);
      v.features(t.s_next, *t.mu_next, eps, xi, phi_next);
      lstd.add(phi, phi_next, config.gamma, t.r + config.reward_offset - budget_coefficient(eps, xi) * norm);
    }
  });
  v.set_weights(lstd.solve(config.ridge * static_cast<double>(lstd.samples())));
  return v;
}

RobustValueModel exact_robust_value(const TabularMdp& mdp, std::span<const ActionDist> pi_beta, double gamma,
                                    const RegularizerSpec& spec, std::size_t mf_levels) {
  const auto base = evaluate_policy(mdp, pi_beta, gamma);
  TabularMdp norm_mdp = mdp;
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    const double n = lp_norm(std::span<const double>(base.q).subspan(s * mdp.num_actions, mdp.num_actions), spec.q());
    for (std::size_t a = 0; a < mdp.num_actions; ++a) norm_mdp.r(s, a) = n;
  }
  const auto w = evaluate_policy(norm_mdp, pi_beta, gamma).v;

  RobustValueModel v(RobustValueSpec{Backend::Tabular, mdp.num_states, mf_levels, gamma});
  const std::size_t cells = v.base_dimension();
  std::vector<double> weights(v.dimension());
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t s = cell / mf_levels;
    weights[cell] = base.v[s];
    for (std::size_t k = 1; k < RobustValueModel::kBudgetBasis; ++k) weights[k * cells + cell] = -w[s];
  }
  v.set_weights(std::move(weights));
  return v;
}

namespace {

/// Nonnegative grid vectors x with x_a in {0, r/(g-1), ..., r} and ||x||_p <= r.
std::vector<std::vector<double>> ball_grid(std::size_t dim, double radius, double p, std::size_t grid) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  const double step = radius / static_cast<double>(grid - 1);
  while (true) {
    for (std::size_t a = 0; a < dim; ++a) x[a] = step * static_cast<double>(idx[a]);
    if (lp_norm(x, p) <= radius * (1.0 + 1e-12)) out.push_back(x);
    std::size_t k = 0;
    while (k < dim && ++idx[k] == grid) idx[k++] = 0;
    if (k == dim) break;
  }
  return out;
}

}  // namespace

WorstCaseGap worst_case_gap(std::span<const double> q_row, double eps, double xi, double p, std::size_t grid) {
  if (grid < 2) throw InvalidInput("grid resolution must be >= 2");
  if (q_row.empty()) throw InvalidInput("Q row must be non-empty");
  if (!(eps >= 0.0 && eps <= 1.0 && xi >= 0.0 && xi <= 1.0)) throw InvalidInput("budgets must lie in [0,1]");
  WorstCaseGap out;
  out.closed_form = eps * xi * lp_norm(q_row, dual_order(p));
  if (eps == 0.0 || xi == 0.0) return out;

  // Flipping the sign of x_a and y_a together never lowers the objective, so
  // the search runs over the nonnegative orthant against |q_a|.
  std::vector<double> mag(q_row.size());
  for (std::size_t a = 0; a < mag.size(); ++a) mag[a] = std::abs(q_row[a]);

  if (std::isinf(p)) {
    // The box constraint separates across coordinates.
    const double sx = eps / static_cast<double>(grid - 1), sy = xi / static_cast<double>(grid - 1);
    for (double m : mag) {
      double best = 0.0;
      for (std::size_t i = 0; i < grid; ++i)
        for (std::size_t j = 0; j < grid; ++j) best = std::max(best, sx * i * sy * j * m);
      out.brute_force += best;
    }
    return out;
  }

  const double points = std::pow(static_cast<double>(grid), static_cast<double>(mag.size()));
  if (points > 2e5) throw InvalidInput("grid too fine for a finite-p brute force over this action space");
  const auto xs = ball_grid(mag.size(), eps, p, grid);
  const auto ys = ball_grid(mag.size(), xi, p, grid);
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      double g = 0.0;
      for (std::size_t a = 0; a < mag.size(); ++a) g += x[a] * y[a] * mag[a];
      out.brute_force = std::max(out.brute_force, g);
    }
  }
  return out;
}

WorstCaseGap worst_case_gap(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu,
                            double eps, double xi, double p, std::size_t grid) {
  return worst_case_gap(q.row(s, mu, nu), eps, xi, p, grid);
}

void write_value_grid_csv(const std::filesystem::path& path, const RobustValueModel& v,
                          std::span<const LocalState> states, const MeanFieldState& mu, std::size_t grid) {
  if (grid < 2) throw InvalidInput("grid resolution must be >= 2");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "agent,eps,xi,value\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t a = 0; a < grid; ++a) {
      for (std::size_t b = 0; b < grid; ++b) {
        const double eps = static_cast<double>(a) / static_cast<double>(grid - 1);
        const double xi = static_cast<double>(b) / static_cast<double>(grid - 1);
        out << i << "," << format_real(eps) << "," << format_real(xi) << ","
            << format_real(v.value(states[i], mu, eps, xi)) << "\n";
      }
    }
  }
}

}  // namespace vai
