#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "vai/select.hpp"

using namespace vai;

namespace {

// One state per agent; V(s, eps, xi) = a_s + b_s eps + c_s xi + d_s eps xi.
struct Table {
  std::vector<double> a, b, c, d;
};

RobustValueModel value_from(const Table& t) {
  const std::size_t S = t.a.size();
  RobustValueModel v(RobustValueSpec{Backend::Tabular, S, 1, 0.9});
  std::vector<double> w;
  for (const auto* part : {&t.a, &t.b, &t.c, &t.d}) w.insert(w.end(), part->begin(), part->end());
  v.set_weights(w);
  return v;
}

Table random_table(std::mt19937_64& rng, std::size_t S) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Table t;
  for (std::size_t s = 0; s < S; ++s) {
    t.a.push_back(u(rng));
    t.b.push_back(-u(rng));
    t.c.push_back(-u(rng));
    t.d.push_back(-u(rng));
  }
  return t;
}

SelectionContext context(const RobustValueModel& v, std::vector<LocalState> states) {
  const auto mu = empirical_mean_field_state(states, v.spec().num_states);
  return SelectionContext{&v, std::move(states), mu};
}

std::vector<LocalState> identity_states(std::size_t n) {
  std::vector<LocalState> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// Oracle for the mean value drop of attacking `ids` with budget eps, straight from the table.
double hand_drop(const Table& t, std::span<const LocalState> states, std::span<const std::size_t> ids, double eps) {
  const double n = static_cast<double>(states.size());
  const double xi = eps * static_cast<double>(ids.size()) / n;
  double drop = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto s = states[i];
    const double e = std::ranges::find(ids, i) != ids.end() ? eps : 0.0;
    drop -= t.b[s] * e + t.c[s] * xi + t.d[s] * e * xi;
  }
  return drop / n;
}

}  // namespace

TEST(SelectorReward, DegenerateStepIsZero) {
  std::mt19937_64 rng(1);
  const auto v = value_from(random_table(rng, 3));
  const auto ctx = context(v, identity_states(3));
  BudgetVector b(3);
  b.set(1, 1.0);
  const auto r = selector_reward(ctx, b, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value, 0.0);
  BudgetVector two = b;
  two.set(0, 1.0);
  two.set(2, 1.0);
  EXPECT_THROW(selector_reward(ctx, b, two), InvalidInput);
}

TEST(SelectorReward, ConstantValueGivesZero) {
  const auto v = value_from(Table{{2, 2, 2}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  const auto ctx = context(v, identity_states(3));
  BudgetVector prev(3), next(3);
  next.set(2, 0.7);
  EXPECT_EQ(selector_reward(ctx, prev, next).value, 0.0);
}

TEST(SelectorReward, HandSummedThreeAgentDrop) {
  const Table t{{1, 1, 1}, {-3, -0.5, 0}, {-0.3, -0.3, -0.3}, {0, -1, 0}};
  const auto v = value_from(t);
  const auto ctx = context(v, {0, 1, 2});
  BudgetVector prev(3), next(3);
  next.set(1, 1.0);
  // xi = 1/3: agent 0 drops 0.1, agent 1 drops 0.5 + 0.1 + 1/3, agent 2 drops 0.1.
  EXPECT_NEAR(selector_reward(ctx, prev, next).value, (0.1 + 0.5 + 0.1 + 1.0 / 3.0 + 0.1) / 3.0, 1e-12);
}

TEST(Greedy, PicksTheLargestDrop) {
  const Table t{{0, 0, 0, 0}, {-0.1, -0.9, -0.4, -0.9}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  const auto v = value_from(t);
  const auto ctx = context(v, identity_states(4));
  const auto one = select_greedy(ctx, 1, 1.0);
  EXPECT_EQ(one.ids, std::vector<std::size_t>{1});  // tie with agent 3 goes to the lower id
  const auto all = select_greedy(ctx, 4, 1.0);
  auto sorted = all.ids;
  std::ranges::sort(sorted);
  EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_TRUE(select_greedy(ctx, 0, 1.0).ids.empty());
  EXPECT_THROW(select_greedy(ctx, 5, 1.0), InvalidInput);
}

TEST(Greedy, CloseToTheExhaustiveOptimum) {
  std::mt19937_64 rng(2);
  const auto states = identity_states(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 5);
    const auto v = value_from(t);
    const auto ctx = context(v, states);
    double best = -kInfinity;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) {
        const std::vector<std::size_t> pair{i, j};
        best = std::max(best, hand_drop(t, states, pair, 1.0));
      }
    const auto g = select_greedy(ctx, 2, 1.0);
    const double got = hand_drop(t, states, g.ids, 1.0);
    ASSERT_GT(best, 0.0);
    EXPECT_GE(got, 0.9 * best) << "trial " << trial;
  }
}

TEST(Greedy, StepRewardsTelescope) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 8);
    const auto v = value_from(t);
    const auto ctx = context(v, identity_states(8));
    const auto g = select_greedy(ctx, 4, 0.6);
    EXPECT_NEAR(g.total_reward(), predicted_drop(ctx, budgets_for(8, g.ids, 0.6)), 1e-12);
    EXPECT_NEAR(g.total_reward(), hand_drop(t, ctx.states, g.ids, 0.6), 1e-12);
  }
}

TEST(Greedy, PermutationEquivariant) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = value_from(random_table(rng, 6));
    const auto states = identity_states(6);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::ranges::shuffle(perm, rng);
    std::vector<LocalState> permuted(6);
    for (std::size_t i = 0; i < 6; ++i) permuted[perm[i]] = states[i];
    const auto a = select_greedy(context(v, states), 3, 1.0);
    const auto b = select_greedy(context(v, permuted), 3, 1.0);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(b.ids[r], perm[a.ids[r]]);
  }
}

TEST(RlSelector, FindsTheDominantAgent) {
  // Agent 2's single-agent drop is ten times any other's. The selector return is undiscounted, so
  // only membership is order-free at K = 2; the first pick is checked at K = 1.
  const Table t{{1, 1, 1, 1}, {-0.1, -0.05, -1.0, -0.08}, {-0.02, -0.02, -0.02, -0.02}, {0, 0, 0, 0}};
  const auto v = value_from(t);
  const auto ctx = context(v, identity_states(4));
  SelectorRlConfig cfg;
  cfg.episodes = 200;
  int first = 0, member = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto one = select_rl(ctx, 1, 1.0, cfg, seed);
    ASSERT_EQ(one.set.ids.size(), 1u);
    first += one.set.ids.front() == 2;
    const auto two = select_rl(ctx, 2, 1.0, cfg, seed);
    ASSERT_EQ(two.set.ids.size(), 2u);
    member += std::ranges::find(two.set.ids, 2u) != two.set.ids.end();
  }
  EXPECT_GE(first, 38);
  EXPECT_GE(member, 38);
}

TEST(RlSelector, EdgeCasesAndDeterminism) {
  std::mt19937_64 rng(6);
  const auto v = value_from(random_table(rng, 5));
  const auto ctx = context(v, identity_states(5));
  SelectorRlConfig cfg;
  cfg.episodes = 100;
  EXPECT_TRUE(select_rl(ctx, 0, 1.0, cfg, 1).set.ids.empty());
  EXPECT_THROW(select_rl(ctx, 6, 1.0, cfg, 1), InvalidInput);
  const auto a = select_rl(ctx, 2, 1.0, cfg, 9), b = select_rl(ctx, 2, 1.0, cfg, 9);
  EXPECT_EQ(a.set.ids, b.set.ids);
  EXPECT_TRUE(std::ranges::equal(a.q.weights(), b.q.weights()));
}

TEST(RlSelector, NoWorseThanRandomOnAverage) {
  std::mt19937_64 rng(7);
  SelectorRlConfig cfg;
  cfg.episodes = 200;
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = random_table(rng, 8);
    const auto v = value_from(t);
    const auto ctx = context(v, identity_states(8));
    const auto rl = select_rl(ctx, 3, 1.0, cfg, trial);
    double random_mean = 0.0;
    for (int d = 0; d < 50; ++d) random_mean += hand_drop(t, ctx.states, select_random(8, 3, 100 + d).ids, 1.0);
    random_mean /= 50.0;
    EXPECT_GE(hand_drop(t, ctx.states, rl.set.ids, 1.0), random_mean) << "trial " << trial;
  }
}

TEST(RandomSelector, DeterministicDistinctAndInRange) {
  const auto a = select_random(10, 4, 3), b = select_random(10, 4, 3);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_NO_THROW(a.validate(10));
  EXPECT_NE(select_random(10, 4, 3).ids, select_random(10, 4, 4).ids);
  EXPECT_EQ(select_random(5, 5, 1).ids.size(), 5u);
  EXPECT_THROW(select_random(3, 4, 1), InvalidInput);
}

TEST(DegreeCentrality, PathAndCompleteGraphs) {
  ObservationGraph path(4);
  for (std::size_t i = 0; i + 1 < 4; ++i) path.connect(i, i + 1);
  EXPECT_EQ(select_degree_centrality(path, 2).ids, (std::vector<std::size_t>{1, 2}));
  ObservationGraph complete(5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) complete.connect(i, j);
  EXPECT_EQ(select_degree_centrality(complete, 3).ids, (std::vector<std::size_t>{0, 1, 2}));
  ObservationGraph star(5);
  for (std::size_t j = 1; j < 5; ++j) star.connect(0, j);
  EXPECT_EQ(select_degree_centrality(star, 1).ids, std::vector<std::size_t>{0});
}

TEST(BruteForce, ScoresEverySubset) {
  const SubsetScorer by_id = [](std::span<const std::size_t> ids) {
    SubsetScore s;
    for (auto i : ids) s.victim_return -= static_cast<double>(i);
    return s;
  };
  const auto one = select_bruteforce(4, 1, by_id);
  EXPECT_EQ(one.set.ids, std::vector<std::size_t>{3});
  EXPECT_EQ(one.scores.size(), 4u);
  const auto two = select_bruteforce(5, 2, by_id);
  EXPECT_EQ(two.scores.size(), 10u);
  EXPECT_EQ(two.set.ids, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(two.scores.front().subset, (std::vector<std::size_t>{0, 1}));
  const auto none = select_bruteforce(4, 0, by_id);
  EXPECT_TRUE(none.set.ids.empty());
  EXPECT_EQ(none.scores.size(), 1u);
  const auto all = select_bruteforce(4, 4, by_id);
  EXPECT_EQ(all.set.ids, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(select_bruteforce(30, 15, by_id), InvalidInput);
  EXPECT_THROW(select_bruteforce(6, 3, by_id, 10), InvalidInput);
}

TEST(Binomial, Values) {
  EXPECT_EQ(binomial(5, 2), 10u);
  EXPECT_EQ(binomial(16, 4), 1820u);
  EXPECT_EQ(binomial(4, 0), 1u);
  EXPECT_EQ(binomial(4, 4), 1u);
  EXPECT_EQ(binomial(3, 4), 0u);
}

TEST(AttackSet, FileRoundTripAndValidation) {
  AttackSet set;
  set.method = SelectionMethod::Rl;
  set.ids = {4, 0, 7};
  set.step_rewards = {0.25, 1.0 / 3.0, -0.125};
  set.seed = 42;
  set.converged = false;
  const auto path = std::filesystem::temp_directory_path() / "vai_attack_set.txt";
  set.write(path);
  const auto back = AttackSet::read(path);
  EXPECT_EQ(back.method, set.method);
  EXPECT_EQ(back.ids, set.ids);
  EXPECT_EQ(back.seed, set.seed);
  EXPECT_EQ(back.converged, set.converged);
  ASSERT_EQ(back.step_rewards.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.step_rewards[i], set.step_rewards[i], 1e-9);
  EXPECT_THROW(set.validate(5), InvalidInput);
  set.ids = {1, 1};
  EXPECT_THROW(set.validate(5), InvalidInput);
  EXPECT_EQ(parse_selection_method(to_string(SelectionMethod::DegreeCentrality)), SelectionMethod::DegreeCentrality);
}

TEST(TieBreaking, RoundingNoiseGoesToTheLowestId) {
  // Agents 1 and 3 share a state; their scores differ only by summation-order rounding.
  const SubsetScorer noisy = [](std::span<const std::size_t> ids) {
    SubsetScore s;
    const double base[] = {0.0, -0.7, 0.0, -0.7};
    s.victim_return = base[ids[0]] - (ids[0] == 3 ? 1e-16 : 0.0);
    return s;
  };
  EXPECT_EQ(select_bruteforce(4, 1, noisy).set.ids, std::vector<std::size_t>{1});
  const Table t{{0.1, 0.2, 0.3}, {-0.3, -0.9, -0.2}, {0, 0, 0}, {0, 0, 0}};
  const auto v = value_from(t);
  const auto ctx = context(v, {2, 1, 0, 1});
  EXPECT_EQ(select_greedy(ctx, 1, 1.0).ids, std::vector<std::size_t>{1});
}
