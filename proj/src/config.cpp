#include "vai/config.hpp"

#include <concepts>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vai {

using nlohmann::json;

namespace {

/// Reads optional fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    read(j_.at(key), where(key), out);
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config field '" + where(k) + "'");
  }

 private:
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <std::unsigned_integral T>
  static void read(const json& v, const std::string& f, T& out) {
    if (!v.is_number_unsigned()) throw ConfigError("field '" + f + "' must be a non-negative integer");
    out = v.get<T>();
  }
  static void read(const json& v, const std::string& f, double& out) {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") {
        out = kInfinity;
        return;
      }
    }
    if (!v.is_number()) throw ConfigError("field '" + f + "' must be a number");
    out = v.get<double>();
  }
  static void read(const json& v, const std::string& f, bool& out) {
    if (!v.is_boolean()) throw ConfigError("field '" + f + "' must be true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& f, std::string& out) {
    if (!v.is_string()) throw ConfigError("field '" + f + "' must be a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, const std::string& f, std::vector<std::uint64_t>& out) {
    if (!v.is_array()) throw ConfigError("field '" + f + "' must be an array of integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError("field '" + f + "' must hold non-negative integers");
      out.push_back(e.get<std::uint64_t>());
    }
  }
  static void read(const json& v, const std::string& f, std::vector<std::string>& out) {
    if (!v.is_array()) throw ConfigError("field '" + f + "' must be an array of strings");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("field '" + f + "' must hold strings");
      out.push_back(e.get<std::string>());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto field(const std::string& name, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError("field '" + name + "': " + e.what());
  }
}

void read_env(Section s, EnvConfig& e) {
  s.get("name", e.env_name);
  s.get("num_agents", e.num_agents);
  s.get("horizon", e.horizon);
  s.get("seed", e.seed);
  s.get("fixed_layout", e.fixed_layout);
  s.get("world_size", e.world_size);
  s.get("comm_radius", e.comm_radius);
  s.get("speed", e.speed);
  s.get("noise", e.noise);
  s.get("turn_step", e.turn_step);
  s.get("heading_bins", e.heading_bins);
  s.get("bearing_bins", e.bearing_bins);
  s.get("grid_width", e.grid_width);
  s.get("grid_height", e.grid_height);
  s.get("zone_size", e.zone_size);
  s.get("demand_rate", e.demand_rate);
  s.get("demand_spread", e.demand_spread);
  s.get("graph_radius", e.graph_radius);
  s.finish();
}

void read_backend(Section& s, Backend& b, const std::string& path) {
  std::string name = to_string(b);
  s.get("backend", name);
  b = field(path + ".backend", [&] { return parse_backend(name); });
}

void read_victim(Section s, VictimTrainingConfig& v) {
  s.get("episodes", v.episodes);
  read_backend(s, v.backend, "victim");
  s.get("mf_levels", v.mf_levels);
  s.get("gamma", v.gamma);
  s.get("learning_rate", v.learning_rate);
  s.get("temperature", v.temperature);
  s.get("explore_start", v.explore_start);
  s.get("explore_end", v.explore_end);
  s.get("buffer_capacity", v.buffer_capacity);
  s.get("batch_size", v.batch_size);
  s.get("eval_episodes", v.eval_episodes);
  s.get("margin", v.margin);
  s.get("select_every", v.select_every);
  s.get("select_episodes", v.select_episodes);
  s.finish();
}

std::string scope_name(NormScope s) { return s == NormScope::OwnAction ? "own_action" : "joint"; }
std::string sampling_name(BudgetSampling s) { return s == BudgetSampling::Hierarchical ? "hierarchical" : "uniform"; }

void read_value(Section s, RobustValueConfig& v, double& q_ridge) {
  read_backend(s, v.backend, "value");
  s.get("mf_levels", v.mf_levels);
  s.get("gamma", v.gamma);
  double p = v.regularizer.p();
  s.get("p", p);
  v.regularizer.norm = field("value.p", [&] { return NormOrder::from(p); });
  std::string scope = scope_name(v.regularizer.scope);
  s.get("norm_scope", scope);
  if (scope == "own_action") v.regularizer.scope = NormScope::OwnAction;
  else if (scope == "joint") v.regularizer.scope = NormScope::Joint;
  else throw ConfigError("field 'value.norm_scope' must be 'own_action' or 'joint'");
  std::string sampling = sampling_name(v.sampling);
  s.get("sampling", sampling);
  if (sampling == "hierarchical") v.sampling = BudgetSampling::Hierarchical;
  else if (sampling == "uniform") v.sampling = BudgetSampling::Uniform;
  else throw ConfigError("field 'value.sampling' must be 'hierarchical' or 'uniform'");
  s.get("budget_draws", v.budget_draws);
  s.get("ridge", v.ridge);
  s.get("q_ridge", q_ridge);
  s.get("reward_offset", v.reward_offset);
  s.finish();
}

void read_rl(Section s, SelectorRlConfig& r) {
  s.get("episodes", r.episodes);
  s.get("learning_rate", r.learning_rate);
  s.get("explore_start", r.explore_start);
  s.get("explore_end", r.explore_end);
  s.get("buffer_capacity", r.buffer_capacity);
  s.get("batch_size", r.batch_size);
  s.get("stable_episodes", r.stable_episodes);
  s.finish();
}

void read_selection(Section s, SelectionConfig& c) {
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.push_back(to_string(m));
  s.get("methods", methods);
  c.methods.clear();
  for (const auto& m : methods) c.methods.push_back(field("selection.methods", [&] { return parse_selection_method(m); }));
  s.get("k", c.k);
  s.get("eps", c.eps);
  s.get("random_draws", c.random_draws);
  s.get("graph_radius", c.graph_radius);
  s.get("brute_cap", c.brute_cap);
  read_rl(s.child("rl"), c.rl);
  s.finish();
}

void read_adversary(Section s, AdversaryTrainingConfig& a) {
  s.get("episodes", a.episodes);
  read_backend(s, a.backend, "adversary");
  s.get("mf_levels", a.mf_levels);
  s.get("gamma", a.gamma);
  s.get("learning_rate", a.learning_rate);
  s.get("explore_start", a.explore_start);
  s.get("explore_end", a.explore_end);
  s.get("buffer_capacity", a.buffer_capacity);
  s.get("batch_size", a.batch_size);
  s.finish();
}

void read_evaluation(Section s, EvaluationConfig& e) {
  s.get("episodes", e.episodes);
  s.get("corpus_episodes", e.corpus_episodes);
  s.get("export_episodes", e.export_episodes);
  s.get("heatmap_grid", e.heatmap_grid);
  s.get("correlation_subsets", e.correlation_subsets);
  s.get("correlation_max_k", e.correlation_max_k);
  s.finish();
}

json p_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

json to_json(const ExperimentConfig& c, bool with_output) {
  json j;
  j["name"] = c.name;
  j["seeds"] = c.seeds;
  if (with_output) j["output_dir"] = c.output_dir.string();
  const auto& e = c.env;
  j["env"] = {{"name", e.env_name},         {"num_agents", e.num_agents},     {"horizon", e.horizon},
              {"seed", e.seed},             {"fixed_layout", e.fixed_layout}, {"world_size", e.world_size},
              {"comm_radius", e.comm_radius}, {"speed", e.speed},             {"noise", e.noise},
              {"turn_step", e.turn_step},   {"heading_bins", e.heading_bins}, {"bearing_bins", e.bearing_bins},
              {"grid_width", e.grid_width}, {"grid_height", e.grid_height},   {"zone_size", e.zone_size},
              {"demand_rate", e.demand_rate}, {"demand_spread", e.demand_spread}, {"graph_radius", e.graph_radius}};
  const auto& v = c.victim;
  j["victim"] = {{"episodes", v.episodes},       {"backend", to_string(v.backend)},
                 {"mf_levels", v.mf_levels},     {"gamma", v.gamma},
                 {"learning_rate", v.learning_rate}, {"temperature", v.temperature},
                 {"explore_start", v.explore_start}, {"explore_end", v.explore_end},
                 {"buffer_capacity", v.buffer_capacity}, {"batch_size", v.batch_size},
                 {"eval_episodes", v.eval_episodes}, {"margin", v.margin},
                 {"select_every", v.select_every}, {"select_episodes", v.select_episodes}};
  const auto& r = c.value;
  j["value"] = {{"backend", to_string(r.backend)}, {"mf_levels", r.mf_levels},
                {"gamma", r.gamma},                {"p", p_json(r.regularizer.p())},
                {"norm_scope", scope_name(r.regularizer.scope)}, {"sampling", sampling_name(r.sampling)},
                {"budget_draws", r.budget_draws},  {"ridge", r.ridge},
                {"q_ridge", c.q_ridge},            {"reward_offset", r.reward_offset}};
  const auto& s = c.selection;
  std::vector<std::string> methods;
  for (auto m : s.methods) methods.push_back(to_string(m));
  j["selection"] = {{"methods", methods},       {"k", s.k},
                    {"eps", s.eps},             {"random_draws", s.random_draws},
                    {"graph_radius", s.graph_radius}, {"brute_cap", s.brute_cap},
                    {"rl",
                     {{"episodes", s.rl.episodes},
                      {"learning_rate", s.rl.learning_rate},
                      {"explore_start", s.rl.explore_start},
                      {"explore_end", s.rl.explore_end},
                      {"buffer_capacity", s.rl.buffer_capacity},
                      {"batch_size", s.rl.batch_size},
                      {"stable_episodes", s.rl.stable_episodes}}}};
  const auto& a = c.adversary;
  j["adversary"] = {{"episodes", a.episodes},         {"backend", to_string(a.backend)},
                    {"mf_levels", a.mf_levels},       {"gamma", a.gamma},
                    {"learning_rate", a.learning_rate}, {"explore_start", a.explore_start},
                    {"explore_end", a.explore_end},   {"buffer_capacity", a.buffer_capacity},
                    {"batch_size", a.batch_size}};
  const auto& ev = c.evaluation;
  j["evaluation"] = {{"episodes", ev.episodes},
                     {"corpus_episodes", ev.corpus_episodes},
                     {"export_episodes", ev.export_episodes},
                     {"heatmap_grid", ev.heatmap_grid},
                     {"correlation_subsets", ev.correlation_subsets},
                     {"correlation_max_k", ev.correlation_max_k}};
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  field("env", [&] {
    env.validate();
    return 0;
  });
  field("victim", [&] {
    victim.validate();
    return 0;
  });
  field("value", [&] {
    value.validate();
    return 0;
  });
  field("selection.rl", [&] {
    selection.rl.validate();
    return 0;
  });
  field("adversary", [&] {
    adversary.validate();
    return 0;
  });
  if (seeds.empty()) throw ConfigError("field 'seeds' must be non-empty");
  if (selection.k > env.num_agents)
    throw ConfigError("field 'selection.k' = " + std::to_string(selection.k) + " exceeds env.num_agents = " +
                      std::to_string(env.num_agents));
  if (!(selection.eps > 0.0 && selection.eps <= 1.0)) throw ConfigError("field 'selection.eps' must lie in (0,1]");
  if (selection.methods.empty()) throw ConfigError("field 'selection.methods' must be non-empty");
  if (selection.random_draws == 0) throw ConfigError("field 'selection.random_draws' must be positive");
  if (!(selection.graph_radius >= 0.0)) throw ConfigError("field 'selection.graph_radius' must be non-negative");
  if (evaluation.episodes == 0) throw ConfigError("field 'evaluation.episodes' must be positive");
  if (evaluation.corpus_episodes == 0) throw ConfigError("field 'evaluation.corpus_episodes' must be positive");
  if (evaluation.heatmap_grid < 2) throw ConfigError("field 'evaluation.heatmap_grid' must be >= 2");
  if (evaluation.correlation_max_k > env.num_agents)
    throw ConfigError("field 'evaluation.correlation_max_k' exceeds env.num_agents");
  if (!(q_ridge >= 0.0)) throw ConfigError("field 'value.q_ridge' must be non-negative");
}

std::string ExperimentConfig::experiment_id() const {
  const std::string text = to_json(*this, false).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section root(j, "");
  root.get("name", c.name);
  root.get("seeds", c.seeds);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;
  read_env(root.child("env"), c.env);
  read_victim(root.child("victim"), c.victim);
  read_value(root.child("value"), c.value, c.q_ridge);
  read_selection(root.child("selection"), c.selection);
  read_adversary(root.child("adversary"), c.adversary);
  read_evaluation(root.child("evaluation"), c.evaluation);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string dump_experiment_config(const ExperimentConfig& config) { return to_json(config, true).dump(2); }

}  // namespace vai
