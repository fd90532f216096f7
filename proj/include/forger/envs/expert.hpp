#ifndef FORGER_ENVS_EXPERT_HPP_
#define FORGER_ENVS_EXPERT_HPP_

#include <algorithm>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "forger/envs/environment.hpp"

namespace forger {

enum class QualityTier { high, medium, low };

/// Scripted demonstrator. With probability `corruption_prob` the chosen
/// action is replaced by a uniformly random legal one.
struct ExpertConfig {
  double corruption_prob = 0.0;

  static ExpertConfig tier(QualityTier t) {
    switch (t) {
      case QualityTier::high: return {0.0};
      case QualityTier::medium: return {0.2};
      case QualityTier::low: return {0.5};
    }
    return {0.0};
  }

  void validate() const {
    if (corruption_prob < 0.0 || corruption_prob > 1.0)
      throw ContractError("expert: corruption probability outside [0,1]");
  }
};

inline QualityTier tier_from_name(const std::string& name) {
  if (name == "high") return QualityTier::high;
  if (name == "medium") return QualityTier::medium;
  if (name == "low") return QualityTier::low;
  throw ContractError("unknown quality tier: " + name);
}

/// What the expert did on one step. `raw` holds the continuous thrust for LineWorld.
struct ExpertAction {
  Action action;
  std::optional<double> raw;
};

namespace expert {

/// Proportional-derivative thrust toward the target.
inline double pd_thrust(const LineWorldConfig& cfg, const LineWorldState& s) {
  return std::clamp(2.0 * (cfg.target - s.x) - 4.0 * s.v, -1.0, 1.0);
}

/// First move (up/down/left/right) on a shortest path to the nearest tile of
/// type `goal`; nullopt if no such tile exists.
inline std::optional<int> path_step(const CraftWorldConfig& cfg, const CraftWorldState& s, Tile goal) {
  const int n = cfg.grid_size;
  std::vector<int> first_move(static_cast<std::size_t>(n * n), -2);
  std::deque<int> queue;
  const int start = s.row * n + s.col;
  first_move[static_cast<std::size_t>(start)] = -1;
  queue.push_back(start);
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    const int r = cur / n;
    const int c = cur % n;
    if (craftworld::at(s, n, r, c) == goal) return first_move[static_cast<std::size_t>(cur)];
    for (int m = 0; m < 4; ++m) {
      const int nr = r + dr[m];
      const int nc = c + dc[m];
      if (nr < 0 || nc < 0 || nr >= n || nc >= n) continue;
      const int next = nr * n + nc;
      if (first_move[static_cast<std::size_t>(next)] != -2) continue;
      first_move[static_cast<std::size_t>(next)] =
          first_move[static_cast<std::size_t>(cur)] == -1 ? m : first_move[static_cast<std::size_t>(cur)];
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

/// Action that makes progress toward `item`, recursing into missing inputs.
inline int act_toward(const CraftWorldConfig& cfg, const CraftWorldState& s, const std::string& item,
                      int depth = 0) {
  const Recipe& r = cfg.recipe_for(item);
  if (depth > static_cast<int>(cfg.recipes.size())) return kInteract;
  if (r.required_tool && count_of(s.inventory, *r.required_tool) < 1)
    return act_toward(cfg, s, *r.required_tool, depth + 1);
  if (r.via == Recipe::Via::harvest) {
    const auto move = path_step(cfg, s, r.source);
    if (!move) return kInteract;  // resource exhausted; nothing sensible left
    return *move == -1 ? kInteract : *move;
  }
  for (const auto& [input, k] : r.inputs)
    if (count_of(s.inventory, input) < k) return act_toward(cfg, s, input, depth + 1);
  return *craftworld::craft_action_for(cfg, item);
}

/// Uncorrupted CraftWorld policy: work through the recipe list in order,
/// acquiring each item up to the amount the goal needs.
inline int craft_policy(const CraftWorldConfig& cfg, const CraftWorldState& s) {
  const auto need = cfg.required_totals();
  for (const auto& r : cfg.recipes) {
    auto it = need.find(r.output);
    if (it == need.end() || it->second <= 0) continue;
    if (count_of(s.acquired, r.output) < it->second) return act_toward(cfg, s, r.output);
  }
  return act_toward(cfg, s, cfg.goal_item());
}

}  // namespace expert

/// One expert decision for the current state of `env`.
template <class Rng>
ExpertAction scripted_expert(const Env& env, const ExpertConfig& ec, Rng& rng) {
  ec.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool corrupt = ec.corruption_prob > 0.0 && unit(rng) < ec.corruption_prob;
  if (auto* lw = std::get_if<LineWorldConfig>(&env.config())) {
    double thrust = expert::pd_thrust(*lw, std::get<LineWorldState>(env.state()));
    if (corrupt) thrust = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    return {discretize(thrust, lw->action_bins), thrust};
  }
  const auto& cw = std::get<CraftWorldConfig>(env.config());
  if (corrupt) return {Action{std::uniform_int_distribution<int>(0, cw.num_actions() - 1)(rng)}, std::nullopt};
  return {Action{expert::craft_policy(cw, std::get<CraftWorldState>(env.state()))}, std::nullopt};
}

}  // namespace forger

#endif  // FORGER_ENVS_EXPERT_HPP_
