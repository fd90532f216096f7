#ifndef FORGER_HARNESS_CONFIG_HPP_
#define FORGER_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forger/agent/agent.hpp"
#include "forger/envs/environment.hpp"
#include "forger/envs/expert.hpp"

namespace forger {

/// Every problem found in a config file, reported together.
class ConfigError : public ContractError {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : ContractError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config:";
    for (const auto& x : p) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

enum class ChainSource { extract, flat, file };

/// Everything one training run needs.
struct ExperimentConfig {
  EnvConfig env = LineWorldConfig{};
  int craft_chain_length = 5;  // only used for craftworld
  ExpertConfig expert;
  std::string demo_file;  // empty: generate in memory
  int demo_episodes = 50;
  std::uint64_t demo_seed = 0;
  ChainSource chain_source = ChainSource::extract;
  std::string chain_file;
  AgentConfig agent;
  int eval_episodes = 100;
};

namespace config_detail {

/// Reads fields out of one JSON object, recording unknown keys and type errors.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  ~Reader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(path_ + "." + it.key() + ": unknown key");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const std::exception& ex) {
      errors_.push_back(path_ + "." + key + ": " + ex.what());
    }
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) errors_.push_back(path_ + "." + key + ": " + what);
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline void parse_schedule(const nlohmann::json& j, const std::string& path, ForgettingSchedule& s,
                           std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  std::string kind = "linear";
  r.get("kind", kind);
  r.get("rho", s.rho0);
  r.get("d", s.d);
  r.get("rate_is_forgotten_share", s.rate_is_forgotten_share);
  if (kind == "constant")
    s.kind = ForgettingSchedule::Kind::constant;
  else if (kind == "linear")
    s.kind = ForgettingSchedule::Kind::linear;
  else if (kind == "full_forget")
    s.kind = ForgettingSchedule::Kind::full_forget;
  else
    r.check(false, "kind", "expected constant | linear | full_forget");
}

inline std::string schedule_kind_name(ForgettingSchedule::Kind k) {
  switch (k) {
    case ForgettingSchedule::Kind::constant: return "constant";
    case ForgettingSchedule::Kind::linear: return "linear";
    case ForgettingSchedule::Kind::full_forget: return "full_forget";
  }
  return "linear";
}

}  // namespace config_detail

/// Strict parse: unknown keys, wrong types and invalid values all become
/// entries of one ConfigError.
inline ExperimentConfig parse_experiment(const nlohmann::json& root) {
  using config_detail::Reader;
  std::vector<std::string> errors;
  ExperimentConfig c;
  {
    Reader r(root, "config", errors);

    if (const auto* env = r.child("env")) {
      Reader e(*env, "env", errors);
      std::string type = "lineworld";
      e.get("type", type);
      if (type == "lineworld") {
        LineWorldConfig lw;
        e.get("target", lw.target);
        e.get("thrust_gain", lw.thrust_gain);
        e.get("success_band", lw.success_band);
        e.get("max_steps", lw.max_steps);
        e.get("success_bonus", lw.success_bonus);
        e.get("action_bins", lw.action_bins);
        e.get("start_low", lw.start_low);
        e.get("start_high", lw.start_high);
        try {
          lw.validate();
        } catch (const std::exception& ex) {
          errors.push_back(std::string("env: ") + ex.what());
        }
        c.env = lw;
      } else if (type == "craftworld") {
        e.get("chain_length", c.craft_chain_length);
        CraftWorldConfig cw;
        if (c.craft_chain_length >= 1 && c.craft_chain_length <= 7)
          cw = craftworld_default(c.craft_chain_length);
        else
          e.check(false, "chain_length", "must be in [1,7]");
        e.get("grid_size", cw.grid_size);
        e.get("window", cw.window);
        e.get("max_steps", cw.max_steps);
        e.get("dense_rewards", cw.dense_rewards);
        double tree = cw.resource_density[Tile::tree], stone = cw.resource_density[Tile::stone];
        double iron = cw.resource_density[Tile::iron_vein], diamond = cw.resource_density[Tile::diamond_vein];
        e.get("density_tree", tree);
        e.get("density_stone", stone);
        e.get("density_iron", iron);
        e.get("density_diamond", diamond);
        cw.resource_density = {{Tile::tree, tree}, {Tile::stone, stone}, {Tile::iron_vein, iron}, {Tile::diamond_vein, diamond}};
        if (!cw.recipes.empty()) {
          try {
            cw.validate();
          } catch (const std::exception& ex) {
            errors.push_back(std::string("env: ") + ex.what());
          }
        }
        c.env = cw;
      } else {
        e.check(false, "type", "unknown env '" + type + "' (expected lineworld | craftworld)");
      }
    }

    if (const auto* ex = r.child("expert")) {
      Reader e(*ex, "expert", errors);
      e.get("noise", c.expert.corruption_prob);
      e.check(c.expert.corruption_prob >= 0 && c.expert.corruption_prob <= 1, "noise", "must be in [0,1]");
    }

    if (const auto* d = r.child("demos")) {
      Reader e(*d, "demos", errors);
      e.get("file", c.demo_file);
      e.get("episodes", c.demo_episodes);
      e.get("seed", c.demo_seed);
      e.check(c.demo_episodes >= 1 || !c.demo_file.empty(), "episodes", "must be >= 1 when no file is given");
    }

    if (const auto* ch = r.child("chain")) {
      Reader e(*ch, "chain", errors);
      std::string source = "extract";
      e.get("source", source);
      e.get("file", c.chain_file);
      if (source == "extract")
        c.chain_source = ChainSource::extract;
      else if (source == "flat")
        c.chain_source = ChainSource::flat;
      else if (source == "file")
        c.chain_source = ChainSource::file;
      else
        e.check(false, "source", "expected extract | flat | file");
      e.check(c.chain_source != ChainSource::file || !c.chain_file.empty(), "file", "required when source is file");
    }

    if (const auto* ag = r.child("agent")) {
      Reader e(*ag, "agent", errors);
      AgentConfig& a = c.agent;
      e.get("imitation_steps", a.imitation_steps);
      e.get("eps_initial", a.eps_initial);
      e.get("eps_final", a.eps_final);
      e.get("eps_decay", a.eps_decay);
      e.get("eps_decay_per_step", a.eps_decay_per_step);
      e.get("target_period", a.target_period);
      e.get("extra_fraction", a.extra_fraction);
      e.get("batch_size", a.batch_size);
      e.get("episodes", a.episodes);
      e.get("hidden", a.hidden);
      e.get("reward_scale", a.reward_scale);
      e.get("learning_starts", a.learning_starts);
      e.get("seed", a.seed);
      std::string mode = "replace";
      e.get("reward_mode", mode);
      if (mode == "replace")
        a.reward_mode = RewardMode::replace;
      else if (mode == "additive")
        a.reward_mode = RewardMode::additive;
      else
        e.check(false, "reward_mode", "expected replace | additive");
      if (const auto* s = e.child("schedule")) config_detail::parse_schedule(*s, "agent.schedule", a.schedule, errors);
      if (const auto* l = e.child("loss")) {
        Reader lr(*l, "agent.loss", errors);
        lr.get("lambda_nstep", a.loss.lambda_nstep);
        lr.get("lambda_margin", a.loss.lambda_margin);
        lr.get("lambda_l2", a.loss.lambda_l2);
        lr.get("margin", a.loss.margin);
        lr.get("gamma", a.loss.gamma);
        lr.get("n", a.loss.n);
        lr.get("l2_biases", a.loss.l2_biases);
      }
      if (const auto* o = e.child("adam")) {
        Reader orr(*o, "agent.adam", errors);
        orr.get("step_size", a.adam.step_size);
        orr.get("beta1", a.adam.beta1);
        orr.get("beta2", a.adam.beta2);
        orr.get("epsilon", a.adam.epsilon);
      }
      if (const auto* rp = e.child("replay")) {
        Reader rr(*rp, "agent.replay", errors);
        rr.get("alpha", a.replay.alpha);
        rr.get("eps_agent", a.replay.eps_agent);
        rr.get("eps_demo", a.replay.eps_demo);
        rr.get("beta0", a.replay.beta0);
        rr.get("agent_capacity", a.replay.agent_capacity);
        rr.get("initial_abs_td", a.replay.initial_abs_td);
      }
    }

    if (const auto* ev = r.child("evaluation")) {
      Reader e(*ev, "evaluation", errors);
      e.get("episodes", c.eval_episodes);
      e.check(c.eval_episodes >= 0, "episodes", "must be >= 0");
    }
  }
  if (errors.empty()) {
    try {
      c.agent.validate();
    } catch (const std::exception& ex) {
      errors.push_back(std::string("agent: ") + ex.what());
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError({std::string("parse error: ") + ex.what()});
  }
  return parse_experiment(j);
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment_text(ss.str());
}

/// Fully resolved config with every key spelled out.
inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json env;
  if (const auto* lw = std::get_if<LineWorldConfig>(&c.env)) {
    env = {{"type", "lineworld"},         {"target", lw->target},       {"thrust_gain", lw->thrust_gain},
           {"success_band", lw->success_band}, {"max_steps", lw->max_steps}, {"success_bonus", lw->success_bonus},
           {"action_bins", lw->action_bins},   {"start_low", lw->start_low}, {"start_high", lw->start_high}};
  } else {
    const auto& cw = std::get<CraftWorldConfig>(c.env);
    auto density = [&](Tile t) {
      auto it = cw.resource_density.find(t);
      return it == cw.resource_density.end() ? 0.0 : it->second;
    };
    env = {{"type", "craftworld"},
           {"chain_length", c.craft_chain_length},
           {"grid_size", cw.grid_size},
           {"window", cw.window},
           {"max_steps", cw.max_steps},
           {"dense_rewards", cw.dense_rewards},
           {"density_tree", density(Tile::tree)},
           {"density_stone", density(Tile::stone)},
           {"density_iron", density(Tile::iron_vein)},
           {"density_diamond", density(Tile::diamond_vein)}};
  }
  const AgentConfig& a = c.agent;
  const char* chain_source = c.chain_source == ChainSource::extract ? "extract"
                             : c.chain_source == ChainSource::flat  ? "flat"
                                                                    : "file";
  nlohmann::json agent{
      {"imitation_steps", a.imitation_steps},
      {"eps_initial", a.eps_initial},
      {"eps_final", a.eps_final},
      {"eps_decay", a.eps_decay},
      {"eps_decay_per_step", a.eps_decay_per_step},
      {"target_period", a.target_period},
      {"extra_fraction", a.extra_fraction},
      {"batch_size", a.batch_size},
      {"episodes", a.episodes},
      {"hidden", a.hidden},
      {"reward_scale", a.reward_scale},
      {"reward_mode", a.reward_mode == RewardMode::replace ? "replace" : "additive"},
      {"learning_starts", a.learning_starts},
      {"seed", a.seed},
      {"schedule",
       {{"kind", config_detail::schedule_kind_name(a.schedule.kind)},
        {"rho", a.schedule.rho0},
        {"d", a.schedule.d},
        {"rate_is_forgotten_share", a.schedule.rate_is_forgotten_share}}},
      {"loss",
       {{"lambda_nstep", a.loss.lambda_nstep},
        {"lambda_margin", a.loss.lambda_margin},
        {"lambda_l2", a.loss.lambda_l2},
        {"margin", a.loss.margin},
        {"gamma", a.loss.gamma},
        {"n", a.loss.n},
        {"l2_biases", a.loss.l2_biases}}},
      {"adam",
       {{"step_size", a.adam.step_size}, {"beta1", a.adam.beta1}, {"beta2", a.adam.beta2}, {"epsilon", a.adam.epsilon}}},
      {"replay",
       {{"alpha", a.replay.alpha},
        {"eps_agent", a.replay.eps_agent},
        {"eps_demo", a.replay.eps_demo},
        {"beta0", a.replay.beta0},
        {"agent_capacity", a.replay.agent_capacity},
        {"initial_abs_td", a.replay.initial_abs_td}}}};
  return {{"env", env},
          {"expert", {{"noise", c.expert.corruption_prob}}},
          {"demos", {{"file", c.demo_file}, {"episodes", c.demo_episodes}, {"seed", c.demo_seed}}},
          {"chain", {{"source", chain_source}, {"file", c.chain_file}}},
          {"agent", agent},
          {"evaluation", {{"episodes", c.eval_episodes}}}};
}

}  // namespace forger

#endif  // FORGER_HARNESS_CONFIG_HPP_
