#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "vai/analysis.hpp"
#include "vai/harness.hpp"
#include "vai/toy.hpp"

using namespace vai;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "harness-test",
  "env": {"name": "vicsek", "num_agents": 8, "horizon": 30},
  "victim": {"episodes": 600, "eval_episodes": 10},
  "selection": {"k": 2, "eps": 1.0, "rl": {"episodes": 150}},
  "adversary": {"episodes": 100, "learning_rate": 0.02},
  "evaluation": {"episodes": 10, "corpus_episodes": 60},
  "seeds": [1]
})";

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vai_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig minimal(const fs::path& out) {
  auto c = parse_experiment_config(kMinimal);
  c.output_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_experiment_config(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Pearson, Examples) {
  const std::vector<double> xs{1, 2, 3};
  EXPECT_DOUBLE_EQ(pearson(xs, std::vector<double>{2, 4, 6}), 1.0);
  EXPECT_DOUBLE_EQ(pearson(xs, std::vector<double>{3, 2, 1}), -1.0);
  EXPECT_THROW(pearson(xs, std::vector<double>{5, 5, 5}), UndefinedCorrelation);
  EXPECT_THROW(pearson(xs, std::vector<double>{1, 2}), InvalidInput);
}

TEST(Pearson, AffineImagesGiveTheSign) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> xs(3 + rng() % 20), ys;
    for (auto& x : xs) x = g(rng);
    double a = g(rng);
    if (std::abs(a) < 1e-3) a = 1.0;
    const double b = g(rng);
    for (double x : xs) ys.push_back(a * x + b);
    EXPECT_NEAR(pearson(xs, ys), a > 0 ? 1.0 : -1.0, 1e-9);
  }
}

TEST(Pearson, MatchesATwoPassOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> xs(50), ys(50);
  for (std::size_t i = 0; i < 50; ++i) {
    xs[i] = g(rng);
    ys[i] = 0.3 * xs[i] + g(rng);
  }
  // Oracle: correlation of z-scores.
  auto z = [](std::vector<double> v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    s = std::sqrt(s / v.size());
    for (double& x : v) x = (x - m) / s;
    return v;
  };
  const auto zx = z(xs), zy = z(ys);
  double r = 0;
  for (std::size_t i = 0; i < 50; ++i) r += zx[i] * zy[i];
  EXPECT_NEAR(pearson(xs, ys), r / 50.0, 1e-12);
}

TEST(Correlation, ExactToyPredictionsTrackExactAttacks) {
  // Single-agent subsets isolate the per-agent term. Mixed sizes add the aggregate-budget term,
  // which the prediction charges to unattacked agents as well, so the bound there is looser.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto toy = make_role_toy(rng, 4, 3, 12, 0.9, 0.5);
    const auto v = exact_robust_value(toy.mdp, toy.pi_beta, toy.gamma, RegularizerSpec{});
    const SelectionContext ctx{&v, toy.initial_states,
                               empirical_mean_field_state(toy.initial_states, toy.mdp.num_states)};
    for (std::size_t max_k : {1, 6}) {
      std::vector<double> predicted, realized;
      for (const auto& s : correlation_subsets(12, 20, max_k, trial)) {
        predicted.push_back(predicted_drop(ctx, budgets_for(12, s.ids, 1.0)));
        realized.push_back(toy_attacked_return(toy, s.ids, 1.0));
      }
      const double r = pearson(predicted, realized);
      EXPECT_LT(r, 0.0);
      EXPECT_GE(std::abs(r), max_k == 1 ? 0.99 : 0.95) << "trial " << trial << " max_k " << max_k;
    }
  }
}

TEST(Correlation, IdenticalSubsetsAreSurfaced) {
  const RobustValueModel v(RobustValueSpec{Backend::Tabular, 3, 1, 0.9});
  const std::vector<LocalState> states{0, 1, 2, 0};
  const SelectionContext ctx{&v, states, empirical_mean_field_state(states, 3)};
  std::vector<double> predicted, realized;
  for (int i = 0; i < 10; ++i) {
    predicted.push_back(predicted_drop(ctx, budgets_for(4, std::vector<std::size_t>{1}, 1.0)));
    realized.push_back(-2.0);
  }
  EXPECT_THROW(pearson(predicted, realized), UndefinedCorrelation);
}

TEST(Correlation, SubsetSizesCycle) {
  const auto subsets = correlation_subsets(10, 12, 4, 7);
  ASSERT_EQ(subsets.size(), 12u);
  for (std::size_t j = 0; j < 12; ++j) {
    EXPECT_EQ(subsets[j].ids.size(), 1 + j % 4);
    EXPECT_NO_THROW(subsets[j].validate(10));
  }
  EXPECT_THROW(correlation_subsets(10, 5, 11, 7), InvalidInput);
}

TEST(Heatmap, ShapeAndConstantValue) {
  const RobustValueModel zero(RobustValueSpec{Backend::Tabular, 3, 1, 0.9});
  const std::vector<LocalState> states{0, 1, 2, 1, 0};
  const SelectionContext ctx{&zero, states, empirical_mean_field_state(states, 3)};
  for (auto mode : {HeatmapMode::PerAgentEps, HeatmapMode::SingleAdversaryXi}) {
    const auto grid = export_heatmap(ctx, AgentLayout{2, 3}, mode);
    ASSERT_EQ(grid.size(), 2u);
    ASSERT_EQ(grid[0].size(), 3u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(grid[i / 3][i % 3], 0.0);
    EXPECT_TRUE(std::isnan(grid[1][2]));
  }
  EXPECT_THROW(export_heatmap(ctx, AgentLayout{2, 2}, HeatmapMode::PerAgentEps), InvalidInput);
  const auto path = fs::temp_directory_path() / "vai_heatmap_test.csv";
  write_heatmap_csv(path, export_heatmap(ctx, AgentLayout{2, 3}, HeatmapMode::PerAgentEps));
  EXPECT_EQ(slurp(path), "row,col_0,col_1,col_2\n0,0,0,0\n1,0,0,\n");
}

TEST(Heatmap, NonNegativeForNonNegativeRewards) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto toy = make_role_toy(rng, 5, 3, 9, 0.9, 0.3);
    const auto v = exact_robust_value(toy.mdp, toy.pi_beta, toy.gamma, RegularizerSpec{});
    const SelectionContext ctx{&v, toy.initial_states,
                               empirical_mean_field_state(toy.initial_states, toy.mdp.num_states)};
    for (auto mode : {HeatmapMode::PerAgentEps, HeatmapMode::SingleAdversaryXi})
      for (const auto& row : export_heatmap(ctx, AgentLayout{3, 3}, mode))
        for (double x : row) EXPECT_GE(x, 0.0);
  }
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error(R"({"env": {"name": "vicsek", "agents": 8}})").find("env.agents"), std::string::npos);
  EXPECT_NE(config_error(R"({"victim": {"episodes": -3}})").find("victim.episodes"), std::string::npos);
  EXPECT_NE(config_error(R"({"selection": {"eps": 1.5}})").find("selection.eps"), std::string::npos);
  EXPECT_NE(config_error(R"({"seeds": []})").find("seeds"), std::string::npos);
  EXPECT_NE(config_error("{not json").find("JSON"), std::string::npos);
  EXPECT_EQ(config_error(kMinimal), "");
}

TEST(Config, KAboveNIsRejectedBeforeCompute) {
  const auto out = fresh_dir("k_above_n");
  EXPECT_NE(config_error(R"({"env": {"num_agents": 4}, "selection": {"k": 5}})").find("selection.k"),
            std::string::npos);
  auto c = minimal(out);
  c.selection.k = 9;
  EXPECT_THROW(Pipeline{c}, ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Config, RoundTripAndExperimentId) {
  const auto c = parse_experiment_config(kMinimal);
  const auto back = parse_experiment_config(dump_experiment_config(c));
  EXPECT_EQ(back.experiment_id(), c.experiment_id());
  auto moved = c;
  moved.output_dir = "elsewhere";
  EXPECT_EQ(moved.experiment_id(), c.experiment_id());
  auto changed = c;
  changed.selection.k = 3;
  EXPECT_NE(changed.experiment_id(), c.experiment_id());
}

TEST(Pipeline, StageDependencies) {
  const auto out = fresh_dir("deps");
  Pipeline p(minimal(out));
  EXPECT_THROW(p.run(Stage::Value, 1), StageDependencyError);
  EXPECT_THROW(p.run(Stage::Select, 1), StageDependencyError);
  EXPECT_THROW(p.run(Stage::Evaluate, 1), StageDependencyError);
  EXPECT_FALSE(p.done(Stage::Value, 1));
}

TEST(Pipeline, MinimalRunIsCompleteIdempotentAndDeterministic) {
  const auto a = fresh_dir("run_a"), b = fresh_dir("run_b");
  Pipeline pa(minimal(a));
  const auto dir = pa.run_all();
  for (const char* f : {"victim_q.ckpt", "trajectories.csv", "cooperative_q.ckpt", "robust_value.ckpt",
                        "value_grid.csv", "attack_greedy.txt", "attack_rl.txt", "attack_random.txt", "attack_dc.txt",
                        "adversary_greedy.ckpt", "heatmap_eps.csv", "heatmap_xi.csv"})
    EXPECT_TRUE(fs::exists(pa.seed_dir(1) / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  const auto rows = pa.ledger().rows();
  ASSERT_FALSE(rows.empty());
  const auto m = pa.metrics(1);
  EXPECT_TRUE(m.count("evaluate/greedy/attacked_return"));
  EXPECT_TRUE(m.count("evaluate/cooperative/baseline_return"));
  const auto g = AttackSet::read(pa.seed_dir(1) / "attack_greedy.txt");
  EXPECT_EQ(g.ids.size(), 2u);

  const std::string before = slurp(pa.ledger().path());
  Pipeline again(minimal(a));
  again.run_all();
  EXPECT_EQ(slurp(again.ledger().path()), before);

  Pipeline pb(minimal(b));
  pb.run_all();
  EXPECT_EQ(pb.metrics(1), m);
}
