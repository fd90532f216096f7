#ifndef FORGER_HIERARCHY_SUBTASKS_HPP_
#define FORGER_HIERARCHY_SUBTASKS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forger/core.hpp"

namespace forger {

struct ItemEvent {
  std::string item;
  int quantity = 1;
  int step = 0;
  int trajectory = 0;

  friend bool operator==(const ItemEvent&, const ItemEvent&) = default;
};

/// Collapses maximal runs of same-item gains into single events.
inline std::vector<ItemEvent> merge_gains(const std::vector<ItemEvent>& gains) {
  std::vector<ItemEvent> merged;
  for (const auto& g : gains) {
    if (!merged.empty() && merged.back().item == g.item) {
      merged.back().quantity += g.quantity;
    } else {
      merged.push_back(g);
    }
  }
  return merged;
}

/// Inventory-acquisition events of one episode, in chronological order,
/// with adjacent same-item acquisitions merged. The episode is assumed to
/// start from an empty inventory.
inline std::vector<ItemEvent> extract_events(const Episode& ep, int trajectory = 0) {
  std::vector<ItemEvent> gains;
  Inventory prev;
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    for (const auto& [item, n] : inventory_gains(prev, ep.steps[t].inventory))
      gains.push_back({item, n, static_cast<int>(t), trajectory});
    prev = ep.steps[t].inventory;
  }
  return merge_gains(gains);
}

struct SubtaskGraph {
  std::set<std::string> vertices;
  std::map<std::pair<std::string, std::string>, int> edges;  // (from, to) -> transition count

  int weight(const std::string& from, const std::string& to) const {
    auto it = edges.find({from, to});
    return it == edges.end() ? 0 : it->second;
  }
};

inline SubtaskGraph build_graph(const std::vector<std::vector<ItemEvent>>& sequences) {
  SubtaskGraph g;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      g.vertices.insert(seq[i].item);
      if (i > 0 && seq[i - 1].item != seq[i].item) ++g.edges[{seq[i - 1].item, seq[i].item}];
    }
  }
  return g;
}

struct SubtaskChain {
  std::vector<SubgoalId> subgoals;
  /// edges pointing backwards along the chain (dropped)
  int back_edges = 0;
  int back_edge_weight = 0;
  /// trajectories whose event order is not a forward walk of the chain
  int violations = 0;

  bool empty() const { return subgoals.empty(); }
  std::size_t size() const { return subgoals.size(); }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < subgoals.size(); ++i)
      if (subgoals[i].name == name) return static_cast<int>(i);
    return -1;
  }

  /// One subgoal that terminates only with the episode (flat ForgER).
  static SubtaskChain flat(const std::string& name = "task") {
    SubtaskChain c;
    c.subgoals.push_back({name, "", 1});
    return c;
  }

  /// "log(3), planks(3), ..."
  std::string summary() const {
    std::string s;
    for (const auto& g : subgoals) {
      if (!s.empty()) s += ", ";
      s += g.name + "(" + std::to_string(g.required_quantity) + ")";
    }
    return s;
  }
};

/// Linearizes the graph: ascending mean first-occurrence step (ties by
/// name); quantity = ceil(median per-trajectory total).
inline SubtaskChain graph_to_chain(const SubtaskGraph& graph, const std::vector<std::vector<ItemEvent>>& sequences) {
  if (graph.vertices.empty()) throw ContractError("graph_to_chain: empty graph");
  struct Stats {
    double first_sum = 0.0;
    int trajectories = 0;
    std::vector<int> totals;
  };
  std::map<std::string, Stats> stats;
  for (const auto& seq : sequences) {
    std::map<std::string, int> first, total;
    for (const auto& e : seq) {
      if (!first.count(e.item)) first[e.item] = e.step;
      total[e.item] += e.quantity;
    }
    for (const auto& [item, step] : first) {
      auto& s = stats[item];
      s.first_sum += step;
      ++s.trajectories;
      s.totals.push_back(total[item]);
    }
  }

  std::vector<std::pair<double, std::string>> order;
  for (const auto& v : graph.vertices) {
    const auto& s = stats[v];
    const double mean = s.trajectories ? s.first_sum / s.trajectories : 0.0;
    order.emplace_back(mean, v);
  }
  std::sort(order.begin(), order.end());

  SubtaskChain chain;
  std::map<std::string, int> position;
  for (const auto& [mean, item] : order) {
    auto totals = stats[item].totals;
    int qty = 1;
    if (!totals.empty()) {
      std::sort(totals.begin(), totals.end());
      const std::size_t n = totals.size();
      const double median = n % 2 ? totals[n / 2] : 0.5 * (totals[n / 2 - 1] + totals[n / 2]);
      qty = std::max(1, static_cast<int>(std::ceil(median)));
    }
    position[item] = static_cast<int>(chain.subgoals.size());
    chain.subgoals.push_back({item, item, qty});
  }

  for (const auto& [edge, w] : graph.edges) {
    if (position[edge.first] > position[edge.second]) {
      ++chain.back_edges;
      chain.back_edge_weight += w;
    }
  }
  for (const auto& seq : sequences) {
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (position[seq[i].item] < position[seq[i - 1].item]) {
        ++chain.violations;
        break;
      }
    }
  }
  return chain;
}

/// +1 per unit of the subgoal's item gained this step.
inline double pseudo_reward(const Inventory& delta, const SubgoalId& g) {
  if (g.required_item.empty()) return 0.0;
  return static_cast<double>(std::max(0, count_of(delta, g.required_item)));
}

inline bool subgoal_met(const SubgoalId& g, const Inventory& acquired) {
  if (g.required_item.empty()) return false;
  return count_of(acquired, g.required_item) >= g.required_quantity;
}

/// Index of the first chain subgoal not yet met by the cumulative
/// acquisitions; stays on the last one once everything is met.
inline int advance(const SubtaskChain& chain, const Inventory& acquired) {
  if (chain.empty()) throw ContractError("advance: empty chain");
  for (std::size_t i = 0; i < chain.subgoals.size(); ++i)
    if (!subgoal_met(chain.subgoals[i], acquired)) return static_cast<int>(i);
  return static_cast<int>(chain.subgoals.size()) - 1;
}

/// Option view of one chain position.
struct OptionSpec {
  const SubtaskChain* chain = nullptr;
  int index = 0;

  const SubgoalId& subgoal() const { return chain->subgoals[static_cast<std::size_t>(index)]; }

  bool can_initiate(const Inventory& acquired) const {
    return index == 0 || subgoal_met(chain->subgoals[static_cast<std::size_t>(index - 1)], acquired);
  }
  bool terminated(const Inventory& acquired) const { return subgoal_met(subgoal(), acquired); }
};

}  // namespace forger

#endif  // FORGER_HIERARCHY_SUBTASKS_HPP_
