#include "vai/victim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vai/rollout.hpp"

namespace vai {

void VictimTrainingConfig::validate() const {
  if (episodes == 0) throw InvalidInput("victim.episodes must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("victim.gamma must lie in [0,1)");
  if (!(learning_rate > 0.0)) throw InvalidInput("victim.learning_rate must be positive");
  if (!(temperature > 0.0)) throw InvalidInput("victim.temperature must be positive");
  if (!(explore_start >= 0.0 && explore_start <= 1.0 && explore_end >= 0.0 && explore_end <= 1.0))
    throw InvalidInput("victim exploration rates must lie in [0,1]");
  if (buffer_capacity == 0 || batch_size == 0) throw InvalidInput("victim buffer and batch sizes must be positive");
  if (eval_episodes == 0) throw InvalidInput("victim.eval_episodes must be positive");
  if (mf_levels == 0) throw InvalidInput("victim.mf_levels must be positive");
  if (select_every > 0 && select_episodes == 0) throw InvalidInput("victim.select_episodes must be positive");
}

namespace {

std::string failure_message(double trained, double random) {
  std::ostringstream os;
  os << "victim training did not beat the random policy by the required margin (trained " << trained
     << ", random " << random << ")";
  return os.str();
}

struct Fields {
  MeanFieldState mu;
  MeanFieldAction nu;
};

struct Sample {
  LocalState s;
  ActionIndex a;
  double r;
  LocalState s_next;
  std::shared_ptr<const Fields> cur;
  std::shared_ptr<const Fields> next;  // nu here is the estimate the next decision conditions on
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) { data_.reserve(capacity); }
  void push(Sample s) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(s));
    } else {
      data_[head_] = std::move(s);
      head_ = (head_ + 1) % capacity_;
    }
  }
  std::size_t size() const { return data_.size(); }
  const Sample& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Sample> data_;
};

double expected_value(const QModel& q, LocalState s, const MeanFieldState& mu, const MeanFieldAction& nu,
                      double temperature) {
  const auto row = q.row(s, mu, nu);
  const auto pi = softmax(row, temperature);
  double v = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) v += pi[a] * row[a];
  return v;
}

double mean(const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(); }

}  // namespace

TrainingFailure::TrainingFailure(double trained, double random)
    : std::runtime_error(failure_message(trained, random)), trained_return(trained), random_return(random) {}

bool exceeds_margin(double trained_return, double random_return, double margin) {
  return trained_return - random_return >= margin * std::abs(random_return);
}

VictimModel train_victim(const EnvConfig& env_config, const VictimTrainingConfig& config, std::uint64_t seed) {
  auto env = make_environment(env_config);
  return train_victim(*env, config, seed);
}

VictimModel train_victim(Environment& env, const VictimTrainingConfig& config, std::uint64_t seed) {
  config.validate();
  QModelSpec spec{config.backend, env.state_size(), env.action_size(), config.mf_levels, config.gamma};
  auto q = std::make_shared<QModel>(spec);

  const std::size_t n = env.num_agents();
  std::mt19937_64 rng(derive_seed(seed, 11));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ReplayBuffer buffer(config.buffer_capacity);
  std::vector<ActionIndex> actions(n);
  const std::size_t decay_episodes = std::max<std::size_t>(1, config.episodes / 2);
  const BudgetVector none(n);

  // Snapshot selection: once exploration has decayed, keep the best-scoring Q seen.
  std::shared_ptr<QModel> best;
  double best_return = -kInfinity;
  auto consider = [&] {
    const BoltzmannPolicy pi(q, config.temperature);
    const double r = mean(episode_returns(env, pi, nullptr, none, config.select_episodes, derive_seed(seed, 8)));
    if (r > best_return) {
      best_return = r;
      best = std::make_shared<QModel>(*q);
    }
  };

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const double frac = std::min(1.0, static_cast<double>(ep) / static_cast<double>(decay_episodes));
    const double explore = config.explore_start + frac * (config.explore_end - config.explore_start);

    env.reset(derive_seed(seed, 1000 + ep));
    std::vector<LocalState> states = env.snapshot().states;
    auto cur = std::make_shared<Fields>(Fields{env.mean_field(), MeanFieldAction::uniform(env.action_size())});

    for (std::size_t t = 0; t < env.horizon(); ++t) {
      // cur->nu holds the previous step's mean action, which is what decisions condition on.
      for (std::size_t i = 0; i < n; ++i) {
        if (unif(rng) < explore) {
          actions[i] = std::min<std::size_t>(env.action_size() - 1,
                                             static_cast<std::size_t>(unif(rng) * env.action_size()));
        } else {
          const auto row = q->row(states[i], cur->mu, cur->nu);
          actions[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        }
      }
      StepResult res = env.step(actions);
      auto acted = std::make_shared<Fields>(Fields{cur->mu, res.nu});
      auto next = std::make_shared<Fields>(Fields{res.mu, res.nu});
      for (std::size_t i = 0; i < n; ++i) {
        const double r = res.agent_rewards.empty() ? res.reward : res.agent_rewards[i];
        buffer.push(Sample{states[i], actions[i], r, res.states[i], acted, next});
      }

      for (std::size_t b = 0; b < config.batch_size && buffer.size() > 0; ++b) {
        const Sample& smp = buffer[static_cast<std::size_t>(unif(rng) * buffer.size()) % buffer.size()];
        const double target =
            smp.r + config.gamma * expected_value(*q, smp.s_next, smp.next->mu, smp.next->nu, config.temperature);
        q->update(smp.s, smp.a, smp.cur->mu, smp.cur->nu, target, config.learning_rate);
      }
      states = std::move(res.states);
      cur = next;
    }
    if (config.select_every > 0 && ep + 1 >= decay_episodes && (ep + 1) % config.select_every == 0) consider();
  }
  if (best) {
    consider();
    q = best;
  }

  VictimModel model{q, config.temperature, 0.0, 0.0};
  const BoltzmannPolicy trained = model.policy();
  const UniformPolicy random(env.action_size());
  model.trained_return = mean(episode_returns(env, trained, nullptr, none, config.eval_episodes, derive_seed(seed, 7)));
  model.random_return = mean(episode_returns(env, random, nullptr, none, config.eval_episodes, derive_seed(seed, 7)));
  if (!exceeds_margin(model.trained_return, model.random_return, config.margin))
    throw TrainingFailure(model.trained_return, model.random_return);
  return model;
}

}  // namespace vai
