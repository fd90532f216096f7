#ifndef FORGER_ENVS_CRAFTWORLD_HPP_
#define FORGER_ENVS_CRAFTWORLD_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "forger/core.hpp"

namespace forger {

enum class Tile : std::uint8_t { empty = 0, tree, stone, iron_vein, diamond_vein };

inline constexpr int kTileTypes = 5;

inline const std::array<const char*, kTileTypes>& tile_names() {
  static const std::array<const char*, kTileTypes> names{"empty", "tree", "stone", "iron_vein",
                                                         "diamond_vein"};
  return names;
}

inline Tile tile_from_name(const std::string& name) {
  const auto& names = tile_names();
  for (int i = 0; i < kTileTypes; ++i)
    if (name == names[static_cast<std::size_t>(i)]) return static_cast<Tile>(i);
  throw ContractError("unknown tile type: " + name);
}

struct Recipe {
  enum class Via : std::uint8_t { craft, harvest };

  std::string output;
  Inventory inputs;  // craft only
  Via via = Via::craft;
  std::optional<std::string> required_tool;
  Tile source = Tile::empty;  // harvest only
};

/// Item values on the Minecraft ObtainDiamond ladder.
inline const std::map<std::string, double>& item_ladder_rewards() {
  static const std::map<std::string, double> table{
      {"log", 1},           {"planks", 2},         {"stick", 4},      {"crafting_table", 4},
      {"wooden_pickaxe", 8}, {"cobblestone", 16},  {"furnace", 32},   {"stone_pickaxe", 32},
      {"iron_ore", 64},     {"iron_ingot", 128},   {"iron_pickaxe", 256}, {"diamond", 1024}};
  return table;
}

struct CraftWorldConfig {
  int grid_size = 8;
  int window = 5;
  std::vector<Recipe> recipes;
  std::map<std::string, double> reward_table;
  int max_steps = 200;
  std::map<Tile, double> resource_density{
      {Tile::tree, 0.20}, {Tile::stone, 0.12}, {Tile::iron_vein, 0.04}, {Tile::diamond_vein, 0.02}};
  bool dense_rewards = false;

  /// Items in recipe order; this is also the inventory block of the observation.
  std::vector<std::string> items() const {
    std::vector<std::string> out;
    for (const auto& r : recipes) out.push_back(r.output);
    return out;
  }

  const std::string& goal_item() const { return recipes.back().output; }

  std::vector<int> craft_recipe_indices() const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < recipes.size(); ++i)
      if (recipes[i].via == Recipe::Via::craft) idx.push_back(static_cast<int>(i));
    return idx;
  }

  int num_actions() const { return 5 + static_cast<int>(craft_recipe_indices().size()); }

  int obs_dim() const {
    return window * window * kTileTypes + static_cast<int>(recipes.size());
  }

  const Recipe& recipe_for(const std::string& item) const {
    for (const auto& r : recipes)
      if (r.output == item) return r;
    throw ContractError("no recipe produces " + item);
  }

  void validate() const {
    if (grid_size <= 0) throw ContractError("craftworld: grid_size must be positive");
    if (window <= 0 || window % 2 == 0) throw ContractError("craftworld: window must be odd");
    if (window > grid_size) throw ContractError("craftworld: window larger than grid");
    if (max_steps <= 0) throw ContractError("craftworld: max_steps must be positive");
    if (recipes.empty()) throw ContractError("craftworld: no recipes");
    std::set<std::string> known;
    for (const auto& r : recipes) {
      if (known.count(r.output)) throw ContractError("craftworld: duplicate recipe for " + r.output);
      // Dependency order implies acyclic.
      if (r.required_tool && !known.count(*r.required_tool))
        throw ContractError("craftworld: tool " + *r.required_tool + " not produced before " +
                            r.output);
      if (r.via == Recipe::Via::craft) {
        if (r.inputs.empty()) throw ContractError("craftworld: craft recipe without inputs");
        for (const auto& [item, n] : r.inputs) {
          if (n <= 0) throw ContractError("craftworld: non-positive recipe input");
          if (!known.count(item))
            throw ContractError("craftworld: input " + item + " not produced before " + r.output);
        }
      } else if (r.source == Tile::empty) {
        throw ContractError("craftworld: harvest recipe without a source tile");
      }
      if (!reward_table.count(r.output))
        throw ContractError("craftworld: no reward for " + r.output);
      known.insert(r.output);
    }
    for (const auto& [tile, d] : resource_density)
      if (d < 0.0) throw ContractError("craftworld: negative density");
  }

  /// Units of each item needed to obtain one goal item from an empty inventory.
  std::map<std::string, int> required_totals() const {
    std::map<std::string, int> need;
    need[goal_item()] = 1;
    for (auto it = recipes.rbegin(); it != recipes.rend(); ++it) {
      const int n = need[it->output];
      if (n <= 0) continue;
      if (it->required_tool) need[*it->required_tool] = std::max(need[*it->required_tool], 1);
      for (const auto& [item, k] : it->inputs) need[item] += n * k;
    }
    return need;
  }
};

/// Chain of the first `length` default items (1..7), rewards from the item ladder.
///   log -> planks -> stick -> crafting_table -> wooden_pickaxe -> cobblestone -> stone_pickaxe
inline CraftWorldConfig craftworld_default(int length = 7) {
  if (length < 1 || length > 7) throw ContractError("craftworld_default: length must be in [1,7]");
  using Via = Recipe::Via;
  std::vector<Recipe> all{
      {"log", {}, Via::harvest, std::nullopt, Tile::tree},
      {"planks", {{"log", 1}}, Via::craft, std::nullopt, Tile::empty},
      {"stick", {{"planks", 1}}, Via::craft, std::nullopt, Tile::empty},
      {"crafting_table", {{"planks", 1}}, Via::craft, std::nullopt, Tile::empty},
      {"wooden_pickaxe", {{"planks", 1}, {"stick", 1}}, Via::craft, "crafting_table", Tile::empty},
      {"cobblestone", {}, Via::harvest, "wooden_pickaxe", Tile::stone},
      {"stone_pickaxe", {{"cobblestone", 1}, {"stick", 1}}, Via::craft, "crafting_table",
       Tile::empty}};
  CraftWorldConfig cfg;
  cfg.recipes.assign(all.begin(), all.begin() + length);
  for (const auto& r : cfg.recipes) cfg.reward_table[r.output] = item_ladder_rewards().at(r.output);
  return cfg;
}

/// log -> planks -> wooden_pickaxe (2 planks, no tools).
inline CraftWorldConfig craftworld_three_item() {
  using Via = Recipe::Via;
  CraftWorldConfig cfg;
  cfg.recipes = {{"log", {}, Via::harvest, std::nullopt, Tile::tree},
                 {"planks", {{"log", 1}}, Via::craft, std::nullopt, Tile::empty},
                 {"wooden_pickaxe", {{"planks", 2}}, Via::craft, std::nullopt, Tile::empty}};
  for (const auto& r : cfg.recipes) cfg.reward_table[r.output] = item_ladder_rewards().at(r.output);
  return cfg;
}

struct CraftWorldState {
  std::vector<Tile> grid;
  int row = 0;
  int col = 0;
  Inventory inventory;
  Inventory acquired;  // cumulative gains this episode
  std::set<std::string> rewarded;
  int steps = 0;
  bool done = false;
};

struct CraftStepOutcome {
  double reward = 0.0;
  Inventory delta;  // items gained this step
};

enum CraftAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kInteract = 4, kFirstCraft = 5 };

namespace craftworld {

inline Tile& at(CraftWorldState& s, int grid_size, int r, int c) {
  return s.grid[static_cast<std::size_t>(r * grid_size + c)];
}
inline Tile at(const CraftWorldState& s, int grid_size, int r, int c) {
  return s.grid[static_cast<std::size_t>(r * grid_size + c)];
}

/// Procedurally generated initial state. Regenerates until the grid holds
/// enough harvestable tiles for the goal.
inline CraftWorldState generate(const CraftWorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto need = cfg.required_totals();
  std::map<Tile, int> tiles_needed;
  for (const auto& r : cfg.recipes)
    if (r.via == Recipe::Via::harvest) tiles_needed[r.source] += need.count(r.output) ? need.at(r.output) : 0;

  const int cells = cfg.grid_size * cfg.grid_size;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CraftWorldState s;
    s.grid.assign(static_cast<std::size_t>(cells), Tile::empty);
    std::map<Tile, int> counts;
    for (int i = 0; i < cells; ++i) {
      double u = unit(rng);
      for (const auto& [tile, density] : cfg.resource_density) {
        if (u < density) {
          s.grid[static_cast<std::size_t>(i)] = tile;
          ++counts[tile];
          break;
        }
        u -= density;
      }
    }
    std::uniform_int_distribution<int> pos(0, cfg.grid_size - 1);
    s.row = pos(rng);
    s.col = pos(rng);
    bool enough = true;
    for (const auto& [tile, n] : tiles_needed)
      if (counts[tile] < n) enough = false;
    if (enough) return s;
  }
  throw ContractError("craftworld: resource density too low for the configured goal");
}

inline Observation observe(const CraftWorldConfig& cfg, const CraftWorldState& s) {
  Observation obs(static_cast<std::size_t>(cfg.obs_dim()), 0.0);
  const int half = cfg.window / 2;
  std::size_t k = 0;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc, k += kTileTypes) {
      const int r = s.row + dr;
      const int c = s.col + dc;
      if (r < 0 || c < 0 || r >= cfg.grid_size || c >= cfg.grid_size) continue;  // off-map: all zero
      obs[k + static_cast<std::size_t>(at(s, cfg.grid_size, r, c))] = 1.0;
    }
  }
  const auto need = cfg.required_totals();
  for (const auto& r : cfg.recipes) {
    const int scale = std::max(1, need.count(r.output) ? need.at(r.output) : 1);
    obs[k++] = static_cast<double>(count_of(s.inventory, r.output)) / scale;
  }
  return obs;
}

inline bool has_inputs(const Recipe& r, const Inventory& inv) {
  if (r.required_tool && count_of(inv, *r.required_tool) < 1) return false;
  for (const auto& [item, n] : r.inputs)
    if (count_of(inv, item) < n) return false;
  return true;
}

/// Applies one action. Invalid or inapplicable actions are no-ops.
inline CraftStepOutcome apply(const CraftWorldConfig& cfg, CraftWorldState& s, Action a) {
  CraftStepOutcome out;
  auto gain = [&](const std::string& item) {
    s.inventory[item] += 1;
    s.acquired[item] += 1;
    out.delta[item] += 1;
    if (cfg.dense_rewards || !s.rewarded.count(item)) out.reward += cfg.reward_table.at(item);
    s.rewarded.insert(item);
  };

  const int n = cfg.grid_size;
  switch (a.index) {
    case kUp: s.row = std::max(0, s.row - 1); break;
    case kDown: s.row = std::min(n - 1, s.row + 1); break;
    case kLeft: s.col = std::max(0, s.col - 1); break;
    case kRight: s.col = std::min(n - 1, s.col + 1); break;
    case kInteract: {
      Tile& tile = at(s, n, s.row, s.col);
      if (tile == Tile::empty) break;
      for (const auto& r : cfg.recipes) {
        if (r.via != Recipe::Via::harvest || r.source != tile) continue;
        if (r.required_tool && count_of(s.inventory, *r.required_tool) < 1) continue;
        tile = Tile::empty;
        gain(r.output);
        break;
      }
      break;
    }
    default: {
      const auto crafts = cfg.craft_recipe_indices();
      const int i = a.index - kFirstCraft;
      if (i < 0 || i >= static_cast<int>(crafts.size())) break;
      const Recipe& r = cfg.recipes[static_cast<std::size_t>(crafts[static_cast<std::size_t>(i)])];
      if (!has_inputs(r, s.inventory)) break;
      for (const auto& [item, k] : r.inputs) s.inventory[item] -= k;
      gain(r.output);
      break;
    }
  }
  return out;
}

/// Craft action index for the recipe producing `item`, if it is crafted.
inline std::optional<int> craft_action_for(const CraftWorldConfig& cfg, const std::string& item) {
  const auto crafts = cfg.craft_recipe_indices();
  for (std::size_t i = 0; i < crafts.size(); ++i)
    if (cfg.recipes[static_cast<std::size_t>(crafts[i])].output == item)
      return kFirstCraft + static_cast<int>(i);
  return std::nullopt;
}

}  // namespace craftworld
}  // namespace forger

#endif  // FORGER_ENVS_CRAFTWORLD_HPP_
