#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "vai/adversary.hpp"
#include "vai/rollout.hpp"
#include "vai/toy.hpp"
#include "vai/victim.hpp"

using namespace vai;

namespace {

// Deterministic random MDP: each (s, a) moves to one successor.
TabularMdp deterministic_mdp(std::mt19937_64& rng, std::size_t S, std::size_t A) {
  TabularMdp m(S, A);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      m.p(s, a, rng() % S) = 1.0;
      m.r(s, a) = u(rng);
    }
  return m;
}

std::vector<ActionDist> random_policy(std::mt19937_64& rng, std::size_t S, std::size_t A) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<ActionDist> pi;
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> w(A);
    for (auto& x : w) x = u(rng);
    pi.push_back(ActionDist::normalized(w));
  }
  return pi;
}

double discounted(const Episode& ep, double gamma) {
  double total = 0.0, g = 1.0;
  for (const auto& step : ep) {
    total += g * step.reward;
    g *= gamma;
  }
  return total;
}

TablePolicy point_table(std::span<const ActionIndex> actions, std::size_t A) {
  std::vector<ActionDist> t;
  for (ActionIndex a : actions) t.push_back(ActionDist::point_mass(A, a));
  return TablePolicy(std::move(t));
}

struct VicsekVictim {
  EnvConfig env;
  VictimModel model;
};

const VicsekVictim& vicsek_victim() {
  static const VicsekVictim v = [] {
    VicsekVictim out;
    out.env.env_name = "vicsek";
    out.env.num_agents = 16;
    VictimTrainingConfig cfg;
    cfg.episodes = 2000;
    out.model = train_victim(out.env, cfg, 1);
    return out;
  }();
  return v;
}

AdversaryTrainingConfig vicsek_adversary_config() {
  AdversaryTrainingConfig cfg;
  cfg.episodes = 400;
  cfg.learning_rate = 0.02;
  return cfg;
}

}  // namespace

TEST(Adversary, EmptySetIsANoop) {
  auto env = make_environment(vicsek_victim().env);
  const auto victim = vicsek_victim().model.policy();
  const auto adv = train_adversary(*env, victim, AttackSet{}, 1.0, vicsek_adversary_config(), 3);
  EXPECT_TRUE(adv.noop);
  EXPECT_FALSE(adv.warning.empty());
  const std::uint64_t seeds[] = {5};
  const auto rep = evaluate_attack(*env, victim, nullptr, std::span<const std::size_t>{}, 1.0, 5, seeds);
  EXPECT_EQ(rep.mean, rep.baseline_mean);
  EXPECT_EQ(rep.returns, rep.baseline_returns);
}

TEST(Adversary, ZeroBudgetMatchesTheBaseline) {
  auto env = make_environment(vicsek_victim().env);
  const auto victim = vicsek_victim().model.policy();
  const UniformPolicy adversary(env->action_size());
  const std::vector<std::size_t> ids{0, 5, 9};
  const std::uint64_t seeds[] = {1, 2};
  const auto rep = evaluate_attack(*env, victim, &adversary, ids, 0.0, 4, seeds);
  EXPECT_EQ(rep.returns, rep.baseline_returns);
  EXPECT_EQ(rep.mean, rep.baseline_mean);
}

TEST(Adversary, MimicIsIndistinguishable) {
  auto env = make_environment(vicsek_victim().env);
  const auto victim = vicsek_victim().model.policy();
  const std::vector<std::size_t> ids{1, 2, 3, 4};
  const std::uint64_t seeds[] = {1, 2, 3};
  const auto rep = evaluate_attack(*env, victim, &victim, ids, 1.0, 20, seeds);
  EXPECT_LE(std::abs(rep.mean - rep.baseline_mean), rep.pooled_std());
}

TEST(Adversary, VicsekAttackBeatsTwoPooledStd) {
  auto env = make_environment(vicsek_victim().env);
  const auto& vm = vicsek_victim().model;
  const auto victim = vm.policy();
  const auto before = std::vector<double>(vm.q->weights().begin(), vm.q->weights().end());
  AttackSet set;
  set.ids = {0, 5, 10, 15};
  const auto adv = train_adversary(*env, victim, set, 1.0, vicsek_adversary_config(), 7);
  ASSERT_FALSE(adv.noop);
  // The victim's parameters are byte-identical after training.
  ASSERT_EQ(vm.q->weights().size(), before.size());
  EXPECT_EQ(std::memcmp(vm.q->weights().data(), before.data(), before.size() * sizeof(double)), 0);

  const auto pi_alpha = adv.policy();
  const std::uint64_t seeds[] = {11};
  const auto rep = evaluate_attack(*env, victim, pi_alpha.get(), set.ids, 1.0, 20, seeds);
  EXPECT_GT(rep.baseline_mean - rep.mean, 2.0 * rep.pooled_std())
      << "attacked " << rep.mean << " baseline " << rep.baseline_mean << " pooled std " << rep.pooled_std();
  EXPECT_LE(rep.mean, rep.baseline_mean + rep.pooled_std());
}

TEST(Adversary, ArgminTableAttainsTheExactWorstCase) {
  std::mt19937_64 rng(4);
  const double gamma = 0.8;
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = deterministic_mdp(rng, 4, 3);
    const auto pi_beta = random_policy(rng, 4, 3);
    const auto worst = adversarial_values(m, pi_beta, 1.0, gamma);
    const auto table = adversarial_actions(m, pi_beta, 1.0, gamma);
    const std::vector<LocalState> starts{0, 1, 2, 3};
    ToyEnv env(m, starts, 120);
    const TablePolicy victim(pi_beta);
    const auto adversary = point_table(table, 3);
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const auto ep = rollout(env, victim, &adversary, budgets_for(4, all, 1.0), 120, trial);
    const double exact = (worst[0] + worst[1] + worst[2] + worst[3]) / 4.0;
    EXPECT_NEAR(discounted(ep, gamma), exact, 1e-2);
  }
}

TEST(Adversary, TrainedOnAToyReachesTheWorstCase) {
  std::mt19937_64 rng(9);
  const double gamma = 0.8;
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = deterministic_mdp(rng, 4, 3);
    const auto pi_beta = random_policy(rng, 4, 3);
    const auto worst = adversarial_values(m, pi_beta, 1.0, gamma);
    ToyEnv env(m, {static_cast<LocalState>(trial % 4)}, 40);
    const TablePolicy victim(pi_beta);
    AdversaryTrainingConfig cfg;
    cfg.episodes = 300;
    cfg.mf_levels = 1;
    cfg.gamma = gamma;
    AttackSet set;
    set.ids = {0};
    const auto adv = train_adversary(env, victim, set, 1.0, cfg, trial);
    const auto pi_alpha = adv.policy();
    const auto ep = rollout(env, victim, pi_alpha.get(), budgets_for(1, set.ids, 1.0), 40, 1);
    EXPECT_NEAR(discounted(ep, gamma), worst[trial % 4], 1e-2) << "trial " << trial;
  }
}

TEST(Adversary, WorstCaseIsMonotoneInBudget) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    TabularMdp m(3, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 3; ++a) {
        std::vector<double> w{u(rng), u(rng), u(rng)};
        const double z = w[0] + w[1] + w[2];
        for (std::size_t n = 0; n < 3; ++n) m.p(s, a, n) = w[n] / z;
        m.r(s, a) = u(rng);
      }
    const auto pi_beta = random_policy(rng, 3, 3);
    std::vector<double> prev = adversarial_values(m, pi_beta, 0.0, 0.9);
    for (int k = 1; k <= 10; ++k) {
      const auto cur = adversarial_values(m, pi_beta, k / 10.0, 0.9);
      for (std::size_t s = 0; s < 3; ++s) EXPECT_LE(cur[s], prev[s] + 1e-9);
      prev = cur;
    }
  }
}

TEST(Evaluation, AggregatesPerSeedMeans) {
  const TabularMdp m = [] {
    std::mt19937_64 rng(6);
    return deterministic_mdp(rng, 3, 2);
  }();
  // Stochastic dynamics come from the stochastic victim.
  ToyEnv env(m, {0, 1, 2, 0}, 10);
  const TablePolicy victim({ActionDist({0.5, 0.5}), ActionDist({0.2, 0.8}), ActionDist({0.9, 0.1})});
  const TablePolicy adversary({ActionDist::point_mass(2, 0), ActionDist::point_mass(2, 0), ActionDist::point_mass(2, 0)});
  const std::vector<std::size_t> ids{2};
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  const auto rep = evaluate_attack(env, victim, &adversary, ids, 0.5, 6, seeds);
  ASSERT_EQ(rep.seed_means.size(), 5u);
  ASSERT_EQ(rep.returns.size(), 30u);
  double total = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    double s = 0.0;
    for (std::size_t e = 0; e < 6; ++e) s += rep.returns[k * 6 + e];
    EXPECT_NEAR(rep.seed_means[k], s / 6.0, 1e-12);
    total += rep.seed_means[k];
  }
  EXPECT_NEAR(rep.mean, total / 5.0, 1e-12);
  EXPECT_GE(rep.mean, *std::ranges::min_element(rep.returns));
  EXPECT_LE(rep.mean, *std::ranges::max_element(rep.returns));
  EXPECT_NEAR(rep.pooled_std(), std::sqrt((rep.std * rep.std + rep.baseline_std * rep.baseline_std) / 2.0), 1e-12);
  const auto again = evaluate_attack(env, victim, &adversary, ids, 0.5, 6, seeds);
  EXPECT_EQ(again.returns, rep.returns);
  // Baseline episodes reuse the attacked episode seeds.
  const auto base = episode_returns(env, victim, nullptr, BudgetVector(4), 6, 3);
  EXPECT_EQ(std::vector<double>(rep.baseline_returns.begin() + 12, rep.baseline_returns.begin() + 18), base);
  EXPECT_THROW(evaluate_attack(env, victim, &adversary, ids, 0.5, 0, seeds), InvalidInput);
}

TEST(Evaluation, ResultsCsvAppendsOneRowPerSeed) {
  AttackEvalReport rep;
  rep.attack_set = {1, 3};
  rep.eps = 1.0;
  rep.seeds = {1, 2};
  rep.seed_means = {-1.5, -2.0};
  rep.baseline_seed_means = {-1.0, -1.25};
  const auto path = std::filesystem::temp_directory_path() / "vai_results_test.csv";
  std::filesystem::remove(path);
  append_attack_results_csv(path, "toy", 4, "greedy", rep);
  append_attack_results_csv(path, "toy", 4, "greedy", rep);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "env,N,K,eps,method,seed,mean,baseline_mean,pooled_std");
  EXPECT_EQ(lines[1].substr(0, 32), "toy,4,2,1,greedy,1,-1.5,-1,0");
}
