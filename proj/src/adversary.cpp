#include "vai/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vai/checkpoint.hpp"
#include "vai/rollout.hpp"

namespace vai {

void AdversaryTrainingConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("adversary.gamma must lie in [0,1)");
  if (!(learning_rate > 0.0)) throw InvalidInput("adversary.learning_rate must be positive");
  if (buffer_capacity == 0 || batch_size == 0) throw InvalidInput("adversary buffer and batch sizes must be positive");
  if (mf_levels == 0) throw InvalidInput("adversary.mf_levels must be positive");
  if (!(explore_start >= 0.0 && explore_start <= 1.0 && explore_end >= 0.0 && explore_end <= 1.0))
    throw InvalidInput("adversary exploration rates must lie in [0,1]");
}

std::unique_ptr<Policy> Adversary::policy() const {
  if (noop) return nullptr;
  return std::make_unique<GreedyPolicy>(q);
}

namespace {

struct Fields {
  MeanFieldState mu;
  MeanFieldAction nu;
};

struct Sample {
  LocalState s;
  ActionIndex a;
  double cost;  // negated shared reward
  LocalState s_next;
  ActionIndex a_next;
  bool next_adversarial;
  std::shared_ptr<const Fields> cur, next;
};

}  // namespace

Adversary train_adversary(Environment& env, const Policy& victim, const AttackSet& attack_set, double eps,
                          const AdversaryTrainingConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = env.num_agents();
  attack_set.validate(n);
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidInput("attack budget must lie in (0,1]");
  Adversary out;
  if (attack_set.ids.empty()) {
    out.noop = true;
    out.warning = "empty attack set: adversary is a no-op";
    return out;
  }

  QModelSpec spec{config.backend, env.state_size(), env.action_size(), config.mf_levels, config.gamma};
  auto q = std::make_shared<QModel>(spec);
  std::mt19937_64 rng(derive_seed(seed, 51));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Sample> buffer;
  buffer.reserve(config.buffer_capacity);
  std::size_t head = 0;
  const std::size_t decay = std::max<std::size_t>(1, config.episodes / 2);
  const std::size_t na = env.action_size();

  std::vector<char> attacked(n, 0);
  for (std::size_t id : attack_set.ids) attacked[id] = 1;

  struct Decision {
    LocalState s;
    ActionIndex a;
    bool adversarial;
  };

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const double frac = std::min(1.0, static_cast<double>(ep) / static_cast<double>(decay));
    const double explore = config.explore_start + frac * (config.explore_end - config.explore_start);
    env.reset(derive_seed(seed, 5000 + ep));
    std::vector<LocalState> states = env.snapshot().states;
    MeanFieldState mu = env.mean_field();
    MeanFieldAction nu_prev = MeanFieldAction::uniform(na);
    std::vector<ActionIndex> actions(n);

    std::vector<std::vector<Decision>> decisions;   // [t][attacked agent]
    std::vector<std::shared_ptr<const Fields>> fields;
    std::vector<double> costs;

    for (std::size_t t = 0; t < env.horizon(); ++t) {
      std::vector<Decision> step;
      for (std::size_t i = 0; i < n; ++i) {
        const ActionDist beta = victim.distribution(states[i], mu, nu_prev);
        if (attacked[i] && unif(rng) < eps) {
          ActionIndex a;
          if (unif(rng) < explore) {
            a = std::min(na - 1, static_cast<std::size_t>(unif(rng) * na));
          } else {
            const auto row = q->row(states[i], mu, nu_prev);
            a = static_cast<ActionIndex>(std::max_element(row.begin(), row.end()) - row.begin());
          }
          actions[i] = a;
          step.push_back({states[i], a, true});
        } else {
          actions[i] = sample_index(beta.probs(), unif(rng));
          if (attacked[i]) step.push_back({states[i], actions[i], false});
        }
      }
      StepResult res = env.step(actions);
      decisions.push_back(std::move(step));
      fields.push_back(std::make_shared<Fields>(Fields{mu, res.nu}));
      costs.push_back(-res.reward);
      nu_prev = res.nu;
      states = std::move(res.states);
      mu = std::move(res.mu);
    }

    for (std::size_t t = 0; t + 1 < decisions.size(); ++t) {
      for (std::size_t j = 0; j < decisions[t].size(); ++j) {
        const auto& d = decisions[t][j];
        const auto& nd = decisions[t + 1][j];
        Sample smp{d.s, d.a, costs[t], nd.s, nd.a, nd.adversarial, fields[t], fields[t + 1]};
        if (buffer.size() < config.buffer_capacity) {
          buffer.push_back(std::move(smp));
        } else {
          buffer[head] = std::move(smp);
          head = (head + 1) % config.buffer_capacity;
        }
      }
      for (std::size_t b = 0; b < config.batch_size && !buffer.empty(); ++b) {
        const Sample& s = buffer[static_cast<std::size_t>(unif(rng) * buffer.size()) % buffer.size()];
        // The next decision's own branch gives an unbiased sample of the mixed backup.
        double next;
        if (s.next_adversarial) {
          const auto row = q->row(s.s_next, s.next->mu, s.next->nu);
          next = *std::max_element(row.begin(), row.end());
        } else {
          next = q->value(s.s_next, s.a_next, s.next->mu, s.next->nu);
        }
        q->update(s.s, s.a, s.cur->mu, s.cur->nu, s.cost + config.gamma * next, config.learning_rate);
      }
    }
  }
  out.q = q;
  return out;
}

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double AttackEvalReport::pooled_std() const { return std::sqrt((std * std + baseline_std * baseline_std) / 2.0); }

AttackEvalReport evaluate_attack(Environment& env, const Policy& victim, const Policy* adversary,
                                 std::span<const std::size_t> attack_set, double eps, std::size_t episodes,
                                 std::span<const std::uint64_t> seeds) {
  if (episodes == 0) throw InvalidInput("evaluation needs at least one episode");
  if (seeds.empty()) throw InvalidInput("evaluation needs at least one seed");
  const std::size_t n = env.num_agents();
  const BudgetVector budgets = budgets_for(n, attack_set, eps);
  AttackEvalReport rep;
  rep.attack_set.assign(attack_set.begin(), attack_set.end());
  rep.eps = eps;
  rep.episodes = episodes;
  rep.seeds.assign(seeds.begin(), seeds.end());
  const BudgetVector none(n);
  for (std::uint64_t s : seeds) {
    const auto attacked = episode_returns(env, victim, budgets.any() ? adversary : nullptr, budgets, episodes, s);
    const auto base = episode_returns(env, victim, nullptr, none, episodes, s);
    rep.seed_means.push_back(sample_mean(attacked));
    rep.baseline_seed_means.push_back(sample_mean(base));
    rep.returns.insert(rep.returns.end(), attacked.begin(), attacked.end());
    rep.baseline_returns.insert(rep.baseline_returns.end(), base.begin(), base.end());
  }
  rep.mean = sample_mean(rep.seed_means);
  rep.baseline_mean = sample_mean(rep.baseline_seed_means);
  rep.std = sample_std(rep.returns);
  rep.baseline_std = sample_std(rep.baseline_returns);
  return rep;
}

void append_attack_results_csv(const std::filesystem::path& path, const std::string& env_name,
                               std::size_t num_agents, const std::string& method, const AttackEvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (fresh) out << "env,N,K,eps,method,seed,mean,baseline_mean,pooled_std\n";
  for (std::size_t k = 0; k < report.seeds.size(); ++k) {
    out << env_name << "," << num_agents << "," << report.attack_set.size() << "," << format_real(report.eps) << ","
        << method << "," << report.seeds[k] << "," << format_real(report.seed_means[k]) << ","
        << format_real(report.baseline_seed_means[k]) << "," << format_real(report.pooled_std()) << "\n";
  }
}

}  // namespace vai
