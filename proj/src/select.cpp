#include "vai/select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vai/checkpoint.hpp"

namespace vai {

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::Greedy: return "greedy";
    case SelectionMethod::Rl: return "rl";
    case SelectionMethod::Random: return "random";
    case SelectionMethod::DegreeCentrality: return "dc";
    case SelectionMethod::BruteForce: return "brute";
  }
  return "?";
}

SelectionMethod parse_selection_method(const std::string& s) {
  for (auto m : {SelectionMethod::Greedy, SelectionMethod::Rl, SelectionMethod::Random,
                 SelectionMethod::DegreeCentrality, SelectionMethod::BruteForce})
    if (to_string(m) == s) return m;
  throw InvalidInput("unknown selection method '" + s + "' (expected greedy, rl, random, dc or brute)");
}

void AttackSet::validate(std::size_t num_agents) const {
  std::vector<char> seen(num_agents, 0);
  for (std::size_t id : ids) {
    if (id >= num_agents) throw InvalidInput("attack set id " + std::to_string(id) + " out of range");
    if (seen[id]) throw InvalidInput("attack set has duplicate id " + std::to_string(id));
    seen[id] = 1;
  }
}

double AttackSet::total_reward() const { return std::accumulate(step_rewards.begin(), step_rewards.end(), 0.0); }

void AttackSet::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method " << to_string(method) << "\n";
  out << "seed " << seed << "\n";
  out << "converged " << (converged ? 1 : 0) << "\n";
  out << "ids";
  for (std::size_t id : ids) out << " " << id;
  out << "\nrewards";
  for (double r : step_rewards) out << " " << format_real(r);
  out << "\n";
}

AttackSet AttackSet::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  AttackSet set;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "method") {
      std::string m;
      ls >> m;
      set.method = parse_selection_method(m);
    } else if (key == "seed") {
      ls >> set.seed;
    } else if (key == "converged") {
      int c = 1;
      ls >> c;
      set.converged = c != 0;
    } else if (key == "ids") {
      std::size_t id;
      while (ls >> id) set.ids.push_back(id);
    } else if (key == "rewards") {
      std::string r;
      while (ls >> r) set.step_rewards.push_back(std::stod(r));
    } else if (!key.empty()) {
      throw InvalidInput("unknown attack set field '" + key + "'");
    }
  }
  return set;
}

SelectionContext make_selection_context(const RobustValueModel& v, const EnvSnapshot& snapshot,
                                        std::size_t state_size) {
  return SelectionContext{&v, snapshot.states, empirical_mean_field_state(snapshot.states, state_size)};
}

namespace {

double mean_value(const SelectionContext& ctx, const BudgetVector& budgets) {
  if (budgets.size() != ctx.num_agents()) throw InvalidInput("budget vector size must equal the agent count");
  const double xi = budgets.xi();
  double total = 0.0;
  for (std::size_t i = 0; i < ctx.num_agents(); ++i) total += ctx.value->value(ctx.states[i], ctx.mu, budgets[i], xi);
  return total / static_cast<double>(ctx.num_agents());
}

// Interchangeable agents can differ by summation-order rounding; such near ties go to the lower id.
bool clearly_greater(double a, double b) { return a > b + 1e-12 * (1.0 + std::abs(b)); }

void check_k(std::size_t n, std::size_t k) {
  if (k > n) throw InvalidInput("K = " + std::to_string(k) + " exceeds N = " + std::to_string(n));
}

}  // namespace

SelectorReward selector_reward(const SelectionContext& ctx, const BudgetVector& eps_prev, const BudgetVector& eps_next) {
  if (eps_prev.size() != eps_next.size()) throw InvalidInput("budget vectors differ in size");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < eps_prev.size(); ++i) changed += eps_prev[i] != eps_next[i];
  if (changed == 0) return {0.0, true};
  if (changed > 1) throw InvalidInput("selector step must change exactly one agent's budget");
  return {mean_value(ctx, eps_prev) - mean_value(ctx, eps_next), false};
}

double predicted_drop(const SelectionContext& ctx, const BudgetVector& budgets) {
  return mean_value(ctx, BudgetVector(ctx.num_agents())) - mean_value(ctx, budgets);
}

AttackSet select_greedy(const SelectionContext& ctx, std::size_t k, double eps_value) {
  const std::size_t n = ctx.num_agents();
  check_k(n, k);
  AttackSet set;
  set.method = SelectionMethod::Greedy;
  BudgetVector budgets(n);
  std::vector<char> taken(n, 0);
  for (std::size_t round = 0; round < k; ++round) {
    std::size_t best = n;
    double best_reward = -kInfinity;
    for (std::size_t c = 0; c < n; ++c) {
      if (taken[c]) continue;
      BudgetVector next = budgets;
      next.set(c, eps_value);
      const double r = selector_reward(ctx, budgets, next).value;
      if (best == n || clearly_greater(r, best_reward)) {
        best_reward = r;
        best = c;
      }
    }
    taken[best] = 1;
    budgets.set(best, eps_value);
    set.ids.push_back(best);
    set.step_rewards.push_back(best_reward);
  }
  return set;
}

void SelectorRlConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("selector learning_rate must be positive");
  if (buffer_capacity == 0 || batch_size == 0) throw InvalidInput("selector buffer and batch sizes must be positive");
  if (!(explore_start >= 0.0 && explore_start <= 1.0 && explore_end >= 0.0 && explore_end <= 1.0))
    throw InvalidInput("selector exploration rates must lie in [0,1]");
}

SelectorQModel::SelectorQModel(std::size_t num_states, std::size_t k)
    : num_states_(num_states), k_(std::max<std::size_t>(k, 1)), w_(num_states + 4, 0.0) {}

void SelectorQModel::features(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count,
                              std::size_t candidate, std::vector<double>& out) const {
  out.assign(w_.size(), 0.0);
  out[ctx.states[candidate]] = 1.0;
  out[num_states_] = budgets.xi();
  out[num_states_ + 1] = budgets[candidate];
  out[num_states_ + 2] = static_cast<double>(count) / static_cast<double>(k_);
  out[num_states_ + 3] = 1.0;
}

double SelectorQModel::value(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count,
                             std::size_t candidate) const {
  thread_local std::vector<double> phi;
  features(ctx, budgets, count, candidate, phi);
  return std::inner_product(phi.begin(), phi.end(), w_.begin(), 0.0);
}

void SelectorQModel::update(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count,
                            std::size_t candidate, double target, double lr) {
  thread_local std::vector<double> phi;
  features(ctx, budgets, count, candidate, phi);
  const double err = target - std::inner_product(phi.begin(), phi.end(), w_.begin(), 0.0);
  for (std::size_t j = 0; j < w_.size(); ++j) w_[j] += lr * err * phi[j];
}

std::size_t SelectorQModel::best(const SelectionContext& ctx, const BudgetVector& budgets, std::size_t count) const {
  std::size_t arg = budgets.size();
  double top = -kInfinity;
  for (std::size_t c = 0; c < budgets.size(); ++c) {
    if (budgets[c] != 0.0) continue;
    const double q = value(ctx, budgets, count, c);
    if (q > top) {
      top = q;
      arg = c;
    }
  }
  return arg;
}

namespace {

struct SelectorSample {
  BudgetVector before;
  std::size_t count;
  std::size_t candidate;
  double reward;
  BudgetVector after;
};

AttackSet greedy_under(const SelectorQModel& q, const SelectionContext& ctx, std::size_t k, double eps_value) {
  AttackSet set;
  set.method = SelectionMethod::Rl;
  BudgetVector budgets(ctx.num_agents());
  for (std::size_t step = 0; step < k; ++step) {
    const std::size_t c = q.best(ctx, budgets, step);
    BudgetVector next = budgets;
    next.set(c, eps_value);
    set.step_rewards.push_back(selector_reward(ctx, budgets, next).value);
    set.ids.push_back(c);
    budgets = std::move(next);
  }
  return set;
}

}  // namespace

RlSelection select_rl(const SelectionContext& ctx, std::size_t k, double eps_value, const SelectorRlConfig& config,
                      std::uint64_t seed) {
  config.validate();
  const std::size_t n = ctx.num_agents();
  check_k(n, k);
  if (!(eps_value > 0.0)) throw InvalidInput("selection budget must be positive");
  RlSelection out{AttackSet{}, SelectorQModel(ctx.value->spec().num_states, k)};
  out.set.method = SelectionMethod::Rl;
  out.set.seed = seed;
  if (k == 0) return out;

  std::mt19937_64 rng(derive_seed(seed, 41));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SelectorSample> buffer;
  std::size_t head = 0;
  AttackSet best_seen;
  double best_total = -kInfinity;
  std::vector<std::size_t> last_greedy;
  std::size_t stable = 0;
  const std::size_t decay = std::max<std::size_t>(1, config.episodes / 2);

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const double frac = std::min(1.0, static_cast<double>(ep) / static_cast<double>(decay));
    const double explore = config.explore_start + frac * (config.explore_end - config.explore_start);
    BudgetVector budgets(n);
    AttackSet episode;
    episode.method = SelectionMethod::Rl;
    for (std::size_t step = 0; step < k; ++step) {
      std::size_t c;
      if (unif(rng) < explore) {
        std::vector<std::size_t> free;
        for (std::size_t j = 0; j < n; ++j)
          if (budgets[j] == 0.0) free.push_back(j);
        c = free[std::min(free.size() - 1, static_cast<std::size_t>(unif(rng) * free.size()))];
      } else {
        c = out.q.best(ctx, budgets, step);
      }
      BudgetVector next = budgets;
      next.set(c, eps_value);
      const double r = selector_reward(ctx, budgets, next).value;
      SelectorSample smp{budgets, step, c, r, next};
      if (buffer.size() < config.buffer_capacity) {
        buffer.push_back(std::move(smp));
      } else {
        buffer[head] = std::move(smp);
        head = (head + 1) % config.buffer_capacity;
      }
      episode.ids.push_back(c);
      episode.step_rewards.push_back(r);
      budgets = std::move(next);

      for (std::size_t b = 0; b < config.batch_size; ++b) {
        const auto& s = buffer[static_cast<std::size_t>(unif(rng) * buffer.size()) % buffer.size()];
        double target = s.reward;
        if (s.count + 1 < k) target += out.q.value(ctx, s.after, s.count + 1, out.q.best(ctx, s.after, s.count + 1));
        out.q.update(ctx, s.before, s.count, s.candidate, target, config.learning_rate);
      }
    }
    if (episode.total_reward() > best_total) {
      best_total = episode.total_reward();
      best_seen = episode;
    }
    AttackSet greedy = greedy_under(out.q, ctx, k, eps_value);
    if (greedy.total_reward() > best_total) {
      best_total = greedy.total_reward();
      best_seen = greedy;
    }
    stable = greedy.ids == last_greedy ? stable + 1 : 0;
    last_greedy = greedy.ids;
  }

  if (stable + 1 >= std::min(config.stable_episodes, config.episodes)) {
    out.set = greedy_under(out.q, ctx, k, eps_value);
  } else {
    out.set = best_seen;
    out.set.converged = false;
  }
  out.set.seed = seed;
  return out;
}

AttackSet select_random(std::size_t num_agents, std::size_t k, std::uint64_t seed) {
  check_k(num_agents, k);
  std::mt19937_64 rng(derive_seed(seed, 31));
  std::vector<std::size_t> ids(num_agents);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, num_agents - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(k);
  AttackSet set;
  set.method = SelectionMethod::Random;
  set.ids = std::move(ids);
  set.seed = seed;
  return set;
}

AttackSet select_degree_centrality(const ObservationGraph& graph, std::size_t k) {
  const std::size_t n = graph.size();
  check_k(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.edge(i, i)) throw InvalidInput("observation graph has a self loop");
    for (std::size_t j = i + 1; j < n; ++j)
      if (graph.edge(i, j) != graph.edge(j, i)) throw InvalidInput("observation graph must be symmetric");
  }
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::size_t a, std::size_t b) { return graph.degree(a) > graph.degree(b); });
  ids.resize(k);
  AttackSet set;
  set.method = SelectionMethod::DegreeCentrality;
  set.ids = std::move(ids);
  return set;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return static_cast<std::size_t>(std::llround(r));
}

BruteForceResult select_bruteforce(std::size_t num_agents, std::size_t k, const SubsetScorer& scorer,
                                   std::size_t cap) {
  check_k(num_agents, k);
  const std::size_t count = binomial(num_agents, k);
  if (count > cap)
    throw InvalidInput("brute force needs " + std::to_string(count) + " subsets, above the cap of " +
                       std::to_string(cap));
  BruteForceResult out;
  out.set.method = SelectionMethod::BruteForce;
  std::vector<std::size_t> subset(k);
  std::iota(subset.begin(), subset.end(), 0);
  std::size_t best = 0;
  while (true) {
    SubsetScore score = scorer(subset);
    score.subset = subset;
    if (out.scores.empty() || clearly_greater(out.scores[best].victim_return, score.victim_return))
      best = out.scores.size();
    out.scores.push_back(std::move(score));
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && subset[i - 1] == num_agents - k + i - 1) --i;
    if (i == 0) break;
    ++subset[i - 1];
    for (std::size_t j = i; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }
  out.set.ids = out.scores[best].subset;
  return out;
}

void write_score_table_csv(const std::filesystem::path& path, std::span<const SubsetScore> scores) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subset,victim_return,std\n";
  for (const auto& s : scores) {
    for (std::size_t j = 0; j < s.subset.size(); ++j) out << (j ? ";" : "") << s.subset[j];
    out << "," << format_real(s.victim_return) << "," << format_real(s.std) << "\n";
  }
}

}  // namespace vai
