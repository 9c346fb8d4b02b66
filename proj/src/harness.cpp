#include "vai/harness.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "vai/checkpoint.hpp"
#include "vai/rollout.hpp"

namespace vai {

namespace fs = std::filesystem;

Ledger::Ledger(fs::path path) : path_(std::move(path)) {}

void Ledger::append(const LedgerRow& row) const {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  const bool fresh = !fs::exists(path_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to ledger " + path_.string());
  if (fresh) out << "experiment_id,stage,method,seed,metric,value\n";
  out << row.experiment_id << "," << row.stage << "," << row.method << "," << row.seed << "," << row.metric << ","
      << format_real(row.value) << "\n";
}

std::vector<LedgerRow> Ledger::rows() const {
  std::vector<LedgerRow> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cells[6];
    for (auto& c : cells) std::getline(ls, c, ',');
    out.push_back({cells[0], cells[1], cells[2], std::stoull(cells[3]), cells[4], std::stod(cells[5])});
  }
  return out;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Victim: return "victim";
    case Stage::Value: return "value";
    case Stage::Select: return "select";
    case Stage::Attack: return "attack";
    case Stage::Evaluate: return "evaluate";
    case Stage::Heatmap: return "heatmap";
    case Stage::Correlate: return "correlate";
  }
  return "?";
}

Pipeline::Pipeline(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  id_ = config_.experiment_id();
}

fs::path Pipeline::experiment_dir() const { return config_.output_dir / id_; }
fs::path Pipeline::seed_dir(std::uint64_t seed) const { return experiment_dir() / ("seed-" + std::to_string(seed)); }
Ledger Pipeline::ledger() const { return Ledger(config_.output_dir / "ledger.csv"); }

bool Pipeline::done(Stage stage, std::uint64_t seed) const {
  return fs::exists(seed_dir(seed) / (to_string(stage) + ".done"));
}

void Pipeline::mark(Stage stage, std::uint64_t seed) const {
  std::ofstream(seed_dir(seed) / (to_string(stage) + ".done")) << id_ << "\n";
}

void Pipeline::require(Stage upstream, std::uint64_t seed, Stage stage) const {
  if (!done(upstream, seed))
    throw StageDependencyError("stage '" + to_string(stage) + "' needs the output of stage '" + to_string(upstream) +
                               "' for seed " + std::to_string(seed) + " (missing in " + seed_dir(seed).string() +
                               ")");
}

void Pipeline::record(Stage stage, const std::string& method, std::uint64_t seed, const std::string& metric,
                      double value) const {
  ledger().append({id_, to_string(stage), method, seed, metric, value});
}

void Pipeline::run(Stage stage, std::uint64_t seed) {
  if (done(stage, seed)) return;
  fs::create_directories(seed_dir(seed));
  {
    std::ofstream cfg(experiment_dir() / "config.json");
    cfg << dump_experiment_config(config_) << "\n";
  }
  switch (stage) {
    case Stage::Victim: victim_stage(seed); break;
    case Stage::Value: value_stage(seed); break;
    case Stage::Select: select_stage(seed); break;
    case Stage::Attack: attack_stage(seed); break;
    case Stage::Evaluate: evaluate_stage(seed); break;
    case Stage::Heatmap: heatmap_stage(seed); break;
    case Stage::Correlate: correlate_stage(seed); break;
  }
  mark(stage, seed);
}

void Pipeline::run(Stage stage) {
  for (auto seed : config_.seeds) run(stage, seed);
}

fs::path Pipeline::run_all(bool correlate) {
  for (auto seed : config_.seeds) {
    for (Stage s : {Stage::Victim, Stage::Value, Stage::Select, Stage::Attack, Stage::Evaluate, Stage::Heatmap})
      run(s, seed);
    if (correlate) run(Stage::Correlate, seed);
  }
  return experiment_dir();
}

std::map<std::string, double> Pipeline::metrics(std::uint64_t seed) const {
  std::map<std::string, double> out;
  for (const auto& r : ledger().rows())
    if (r.experiment_id == id_ && r.seed == seed) out[r.stage + "/" + r.method + "/" + r.metric] = r.value;
  return out;
}

namespace {

struct Loaded {
  std::unique_ptr<Environment> env;
  std::shared_ptr<const QModel> victim_q;
  std::unique_ptr<BoltzmannPolicy> victim;
};

Loaded load_victim(const ExperimentConfig& c, const fs::path& dir) {
  Loaded l;
  l.env = make_environment(c.env);
  l.victim_q = std::make_shared<QModel>(QModel::load(dir / "victim_q.ckpt"));
  l.victim = std::make_unique<BoltzmannPolicy>(l.victim_q, c.victim.temperature);
  return l;
}

std::vector<Episode> corpus(const ExperimentConfig& c, Loaded& l, std::uint64_t seed) {
  return collect_episodes(*l.env, *l.victim, c.evaluation.corpus_episodes, derive_seed(seed, 201));
}

SelectionContext context(Loaded& l, const RobustValueModel& v, std::uint64_t seed) {
  l.env->reset(derive_seed(seed, 301));
  return make_selection_context(v, l.env->snapshot(), l.env->state_size());
}

/// Attack-set labels in evaluation order. The random baseline gets one label per draw.
std::vector<std::pair<std::string, SelectionMethod>> labels(const SelectionConfig& s) {
  std::vector<std::pair<std::string, SelectionMethod>> out;
  for (auto m : s.methods) {
    if (m == SelectionMethod::Random && s.random_draws > 1) {
      for (std::size_t d = 0; d < s.random_draws; ++d) out.emplace_back("random_" + std::to_string(d), m);
    } else {
      out.emplace_back(to_string(m), m);
    }
  }
  return out;
}

double graph_radius(const ExperimentConfig& c) {
  if (c.selection.graph_radius > 0.0) return c.selection.graph_radius;
  return c.env.env_name == "vicsek" ? c.env.comm_radius : c.env.graph_radius;
}

}  // namespace

void Pipeline::victim_stage(std::uint64_t seed) {
  const fs::path dir = seed_dir(seed);
  const VictimModel m = train_victim(config_.env, config_.victim, derive_seed(seed, 101));
  m.q->save(dir / "victim_q.ckpt");
  record(Stage::Victim, "mfq", seed, "trained_return", m.trained_return);
  record(Stage::Victim, "mfq", seed, "random_return", m.random_return);

  Loaded l = load_victim(config_, dir);
  const auto episodes = corpus(config_, l, seed);
  const std::size_t keep = std::min(config_.evaluation.export_episodes, episodes.size());
  write_trajectories_csv(dir / "trajectories.csv", std::span<const Episode>(episodes).first(keep));
}

void Pipeline::value_stage(std::uint64_t seed) {
  require(Stage::Victim, seed, Stage::Value);
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  const auto episodes = corpus(config_, l, seed);

  CooperativeFitConfig qc;
  qc.model = QModelSpec{config_.value.backend, l.env->state_size(), l.env->action_size(), config_.value.mf_levels,
                        config_.value.gamma};
  qc.ridge = config_.q_ridge;
  qc.reward_offset = config_.value.reward_offset;
  const QModel q = fit_cooperative_q(episodes, qc);
  q.save(dir / "cooperative_q.ckpt");
  const RobustValueModel v = fit_robust_value(episodes, q, config_.value, derive_seed(seed, 202));
  v.save(dir / "robust_value.ckpt");

  const auto ctx = context(l, v, seed);
  write_value_grid_csv(dir / "value_grid.csv", v, ctx.states, ctx.mu, config_.evaluation.heatmap_grid);
  record(Stage::Value, "lstd", seed, "transitions", static_cast<double>(count_transitions(episodes)));
  double v0 = 0.0;
  for (auto s : ctx.states) v0 += v.value(s, ctx.mu, 0.0, 0.0);
  record(Stage::Value, "lstd", seed, "zero_budget_value", v0 / static_cast<double>(ctx.num_agents()));
}

void Pipeline::select_stage(std::uint64_t seed) {
  require(Stage::Value, seed, Stage::Select);
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  const RobustValueModel v = RobustValueModel::load(dir / "robust_value.ckpt");
  const auto ctx = context(l, v, seed);
  const auto& sc = config_.selection;
  const std::size_t n = ctx.num_agents();

  std::size_t random_index = 0;
  for (const auto& [label, method] : labels(sc)) {
    AttackSet set;
    switch (method) {
      case SelectionMethod::Greedy: set = select_greedy(ctx, sc.k, sc.eps); break;
      case SelectionMethod::Rl: {
        set = select_rl(ctx, sc.k, sc.eps, sc.rl, derive_seed(seed, 302)).set;
        if (!set.converged) std::cerr << "warning: selector Q-learning did not converge; using the best set seen\n";
        record(Stage::Select, label, seed, "converged", set.converged ? 1.0 : 0.0);
        break;
      }
      case SelectionMethod::Random: set = select_random(n, sc.k, derive_seed(seed, 310 + random_index++)); break;
      case SelectionMethod::DegreeCentrality:
        set = select_degree_centrality(l.env->graph(graph_radius(config_)), sc.k);
        break;
      case SelectionMethod::BruteForce: {
        const std::uint64_t eval_seed = derive_seed(seed, 401);
        std::size_t index = 0;
        const auto result = select_bruteforce(
            n, sc.k,
            [&](std::span<const std::size_t> ids) {
              AttackSet s;
              s.ids.assign(ids.begin(), ids.end());
              const Adversary adv = train_adversary(*l.env, *l.victim, s, sc.eps, config_.adversary,
                                                    derive_seed(seed, 900 + index++));
              const auto pi = adv.policy();
              const auto rep = evaluate_attack(*l.env, *l.victim, pi.get(), s.ids, sc.eps,
                                               config_.evaluation.episodes,
                                               std::span<const std::uint64_t>(&eval_seed, 1));
              return SubsetScore{s.ids, rep.mean, rep.std};
            },
            sc.brute_cap);
        write_score_table_csv(dir / "brute_scores.csv", result.scores);
        set = result.set;
        break;
      }
    }
    set.method = method;
    set.write(dir / ("attack_" + label + ".txt"));
    const double drop = predicted_drop(ctx, budgets_for(n, set.ids, sc.eps));
    record(Stage::Select, label, seed, "predicted_drop", drop);
    if (method == SelectionMethod::Greedy)
      record(Stage::Select, label, seed, "telescoping_gap", std::abs(set.total_reward() - drop));
  }
}

void Pipeline::attack_stage(std::uint64_t seed) {
  require(Stage::Select, seed, Stage::Attack);
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  std::size_t index = 0;
  for (const auto& [label, method] : labels(config_.selection)) {
    const AttackSet set = AttackSet::read(dir / ("attack_" + label + ".txt"));
    const Adversary adv = train_adversary(*l.env, *l.victim, set, config_.selection.eps, config_.adversary,
                                          derive_seed(seed, 800 + index++));
    if (adv.noop) {
      std::cerr << "warning: " << adv.warning << "\n";
      continue;
    }
    adv.q->save(dir / ("adversary_" + label + ".ckpt"));
  }
}

void Pipeline::evaluate_stage(std::uint64_t seed) {
  require(Stage::Attack, seed, Stage::Evaluate);
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  const std::uint64_t eval_seed = derive_seed(seed, 401);
  const double eps = config_.selection.eps;
  std::vector<double> random_means, random_drops;
  double baseline = 0.0, random_pooled = 0.0;
  for (const auto& [label, method] : labels(config_.selection)) {
    const AttackSet set = AttackSet::read(dir / ("attack_" + label + ".txt"));
    std::unique_ptr<Policy> adversary;
    if (!set.ids.empty()) {
      const fs::path ckpt = dir / ("adversary_" + label + ".ckpt");
      if (!fs::exists(ckpt)) throw StageDependencyError("missing adversary checkpoint " + ckpt.string());
      adversary = std::make_unique<GreedyPolicy>(std::make_shared<QModel>(QModel::load(ckpt)));
    }
    const auto rep = evaluate_attack(*l.env, *l.victim, adversary.get(), set.ids, eps, config_.evaluation.episodes,
                                     std::span<const std::uint64_t>(&eval_seed, 1));
    record(Stage::Evaluate, label, seed, "attacked_return", rep.mean);
    record(Stage::Evaluate, label, seed, "pooled_std", rep.pooled_std());
    append_attack_results_csv(experiment_dir() / "results.csv", config_.env.env_name, l.env->num_agents(), label, rep);
    baseline = rep.baseline_mean;
    if (method == SelectionMethod::Random) {
      random_means.push_back(rep.mean);
      random_pooled = std::max(random_pooled, rep.pooled_std());
    }
  }
  record(Stage::Evaluate, "cooperative", seed, "baseline_return", baseline);
  if (random_means.size() > 1) {
    record(Stage::Evaluate, "random", seed, "attacked_return", sample_mean(random_means));
    record(Stage::Evaluate, "random", seed, "pooled_std", random_pooled);
  }
}

void Pipeline::heatmap_stage(std::uint64_t seed) {
  require(Stage::Value, seed, Stage::Heatmap);
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  const RobustValueModel v = RobustValueModel::load(dir / "robust_value.ckpt");
  const auto ctx = context(l, v, seed);
  write_heatmap_csv(dir / "heatmap_eps.csv", export_heatmap(ctx, l.env->layout(), HeatmapMode::PerAgentEps));
  write_heatmap_csv(dir / "heatmap_xi.csv", export_heatmap(ctx, l.env->layout(), HeatmapMode::SingleAdversaryXi));
}

void Pipeline::correlate_stage(std::uint64_t seed) {
  require(Stage::Value, seed, Stage::Correlate);
  const auto& ev = config_.evaluation;
  if (ev.correlation_subsets < 10) throw InvalidInput("correlation needs at least 10 subsets");
  const fs::path dir = seed_dir(seed);
  Loaded l = load_victim(config_, dir);
  const RobustValueModel v = RobustValueModel::load(dir / "robust_value.ckpt");
  const auto ctx = context(l, v, seed);
  const std::size_t max_k = ev.correlation_max_k > 0 ? ev.correlation_max_k : std::max<std::size_t>(1, ctx.num_agents() / 2);
  const auto subsets = correlation_subsets(ctx.num_agents(), ev.correlation_subsets, max_k, derive_seed(seed, 501));
  const auto result = correlate_prediction_vs_attack(ctx, *l.env, *l.victim, subsets, config_.selection.eps,
                                                     config_.adversary, ev.episodes, derive_seed(seed, 502));
  write_correlation_csv(dir / "correlation.csv", result);
  record(Stage::Correlate, "subsets", seed, "pearson_r", result.r);
}

fs::path run_pipeline(const fs::path& config_path) {
  Pipeline p(load_experiment_config(config_path));
  return p.run_all(p.config().evaluation.correlation_subsets > 0);
}

}  // namespace vai
