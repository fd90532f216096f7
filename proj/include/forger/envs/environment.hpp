#ifndef FORGER_ENVS_ENVIRONMENT_HPP_
#define FORGER_ENVS_ENVIRONMENT_HPP_

#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "forger/core.hpp"
#include "forger/envs/craftworld.hpp"
#include "forger/envs/lineworld.hpp"

namespace forger {

using EnvConfig = std::variant<CraftWorldConfig, LineWorldConfig>;

inline std::string env_name(const EnvConfig& cfg) {
  return std::holds_alternative<CraftWorldConfig>(cfg) ? "craftworld" : "lineworld";
}

inline int env_obs_dim(const EnvConfig& cfg) {
  return std::visit(
      [](const auto& c) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, CraftWorldConfig>)
          return c.obs_dim();
        else
          return 2;
      },
      cfg);
}

inline int env_num_actions(const EnvConfig& cfg) {
  return std::visit(
      [](const auto& c) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, CraftWorldConfig>)
          return c.num_actions();
        else
          return c.action_bins;
      },
      cfg);
}

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  Inventory inventory_delta;
};

/// A running episode: configuration plus mutable state. Copyable value type.
class Env {
 public:
  using State = std::variant<CraftWorldState, LineWorldState>;

  Env(EnvConfig config, State state) : config_(std::move(config)), state_(std::move(state)) {}

  const EnvConfig& config() const { return config_; }
  const State& state() const { return state_; }
  State& mutable_state() { return state_; }

  int obs_dim() const { return env_obs_dim(config_); }
  int num_actions() const { return env_num_actions(config_); }
  bool done() const {
    return std::visit([](const auto& s) { return s.done; }, state_);
  }
  int steps() const {
    return std::visit([](const auto& s) { return s.steps; }, state_);
  }

  Observation observe() const {
    if (auto* cw = std::get_if<CraftWorldConfig>(&config_))
      return craftworld::observe(*cw, std::get<CraftWorldState>(state_));
    return lineworld::observe(std::get<LineWorldState>(state_));
  }

  /// Inventory held now (always empty for LineWorld).
  Inventory inventory() const {
    if (auto* s = std::get_if<CraftWorldState>(&state_)) return s->inventory;
    return {};
  }

  /// Items gained since reset.
  Inventory acquired() const {
    if (auto* s = std::get_if<CraftWorldState>(&state_)) return s->acquired;
    return {};
  }

  /// Discrete step. LineWorld maps the index to its bin center.
  StepResult step(Action a) {
    if (a.index < 0 || a.index >= num_actions())
      throw ContractError("env_step: action index out of range");
    if (auto* lw = std::get_if<LineWorldConfig>(&config_))
      return step_continuous(bin_center(a.index, lw->action_bins));
    return step_craft(a);
  }

  /// LineWorld only: apply a raw thrust in [-1, 1].
  StepResult step_continuous(double thrust) {
    auto* lw = std::get_if<LineWorldConfig>(&config_);
    if (!lw) throw ContractError("env_step: continuous action on a discrete environment");
    auto& s = std::get<LineWorldState>(state_);
    if (s.done) throw ContractError("env_step: episode already terminal");
    StepResult out;
    out.reward = lineworld::step(*lw, s, thrust);
    out.done = s.done;
    out.obs = lineworld::observe(s);
    return out;
  }

 private:
  StepResult step_craft(Action a) {
    const auto& cfg = std::get<CraftWorldConfig>(config_);
    auto& s = std::get<CraftWorldState>(state_);
    if (s.done) throw ContractError("env_step: episode already terminal");
    auto outcome = craftworld::apply(cfg, s, a);
    ++s.steps;
    if (count_of(s.acquired, cfg.goal_item()) > 0 || s.steps >= cfg.max_steps) s.done = true;
    StepResult out;
    out.reward = outcome.reward;
    out.inventory_delta = std::move(outcome.delta);
    out.done = s.done;
    out.obs = craftworld::observe(cfg, s);
    return out;
  }

  EnvConfig config_;
  State state_;
};

/// Deterministic in (config, seed).
inline Env env_reset(const EnvConfig& config, std::uint64_t seed) {
  if (auto* cw = std::get_if<CraftWorldConfig>(&config))
    return Env(config, craftworld::generate(*cw, seed));
  return Env(config, lineworld::generate(std::get<LineWorldConfig>(config), seed));
}

}  // namespace forger

#endif  // FORGER_ENVS_ENVIRONMENT_HPP_
