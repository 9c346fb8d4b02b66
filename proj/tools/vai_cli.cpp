#include <CLI11.hpp>

#include <iostream>

#include "vai/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
};

vai::Pipeline make_pipeline(const Options& o) {
  vai::ExperimentConfig c = vai::load_experiment_config(o.config);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.out.empty()) c.output_dir = o.out;
  return vai::Pipeline(std::move(c));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vulnerable agent identification for mean-field multi-agent systems"};
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train-victim", "train the cooperative victim policy and export trajectories"},
      {"fit-value", "fit the cooperative Q and the robust value function"},
      {"select", "choose attack sets with every configured method"},
      {"attack", "train an adversary for each attack set"},
      {"evaluate", "measure victim returns under each adversary"},
      {"correlate", "correlate predicted value drops with realized attacks"},
      {"heatmap", "export per-agent vulnerability grids"},
      {"pipeline", "run every stage in order, skipping finished ones"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seeds, "run only these seeds");
    sub->add_option("--out", opt.out, "override the output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    vai::Pipeline p = make_pipeline(opt);
    if (cmd == "pipeline") {
      p.run_all(p.config().evaluation.correlation_subsets > 0);
    } else {
      static const std::map<std::string, vai::Stage> stages{
          {"train-victim", vai::Stage::Victim}, {"fit-value", vai::Stage::Value},
          {"select", vai::Stage::Select},       {"attack", vai::Stage::Attack},
          {"evaluate", vai::Stage::Evaluate},   {"correlate", vai::Stage::Correlate},
          {"heatmap", vai::Stage::Heatmap},
      };
      p.run(stages.at(cmd));
    }
    std::cout << p.experiment_dir().string() << "\n";
  } catch (const vai::StageDependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vai::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
