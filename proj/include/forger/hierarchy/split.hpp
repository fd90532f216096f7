#ifndef FORGER_HIERARCHY_SPLIT_HPP_
#define FORGER_HIERARCHY_SPLIT_HPP_

#include <map>
#include <string>
#include <vector>

#include "forger/core.hpp"
#include "forger/hierarchy/subtasks.hpp"

namespace forger {

enum class RewardMode { replace, additive };

struct SubgoalData {
  std::vector<Transition> demo;   // margin_mask 1, pseudo-rewards
  std::vector<Transition> extra;  // other subgoals' steps, margin 0, reward 0
};

struct SplitResult {
  std::map<std::string, SubgoalData> per_subgoal;
  /// steps taken after every subgoal was already met (attributed to the last)
  int uncovered_steps = 0;
};

/// Subgoal index of every step of an episode.
///
/// A step belongs to the subgoal active before it, except that a step gaining
/// the item of a later subgoal is attributed to that later subgoal.
inline std::vector<int> attribute_steps(const Episode& ep, const SubtaskChain& chain, int* uncovered = nullptr) {
  std::vector<int> owner(ep.steps.size(), 0);
  Inventory acquired, prev;
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const auto gains = inventory_gains(prev, ep.steps[t].inventory);
    bool all_met = true;
    for (const auto& g : chain.subgoals) all_met = all_met && subgoal_met(g, acquired);
    if (all_met && uncovered) ++*uncovered;
    int idx = forger::advance(chain, acquired);
    for (std::size_t j = static_cast<std::size_t>(idx) + 1; j < chain.subgoals.size(); ++j)
      if (count_of(gains, chain.subgoals[j].required_item) > 0) idx = static_cast<int>(j);
    owner[t] = idx;
    for (const auto& [item, n] : gains) acquired[item] += n;
    prev = ep.steps[t].inventory;
  }
  return owner;
}

namespace detail {

/// Emits transitions for steps [begin, end) of `ep` using the given
/// per-step rewards and terminal flags; n-step windows stay inside the range.
inline void emit_segment(const Episode& ep, std::size_t begin, std::size_t end, const std::vector<double>& rewards,
                         const std::vector<bool>& dones, const std::string& subgoal, int margin_mask, int n,
                         double gamma, std::vector<Transition>& out) {
  Episode seg;
  auto flush = [&](const Observation& final_obs) {
    seg.final_obs = final_obs;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const auto ns = compute_nstep(seg, i, n, gamma);
      Transition tr;
      tr.obs = seg.steps[i].obs;
      tr.action = seg.steps[i].action;
      tr.reward = seg.steps[i].reward;
      tr.next_obs = seg.observation_at(i + 1);
      tr.done = seg.steps[i].done;
      tr.n_return = ns.n_return;
      tr.n_obs = ns.n_obs;
      tr.n_eff = ns.n_eff;
      tr.n_done = ns.n_done;
      tr.subgoal = subgoal;
      tr.margin_mask = margin_mask;
      tr.source = Source::demo;
      out.push_back(std::move(tr));
    }
    seg.steps.clear();
  };
  for (std::size_t t = begin; t < end; ++t) {
    EpisodeStep s = ep.steps[t];
    s.reward = rewards[t];
    s.done = dones[t];
    seg.steps.push_back(std::move(s));
    // a terminal inside the range closes the window early
    if (dones[t]) flush(ep.observation_at(t + 1));
  }
  if (!seg.steps.empty()) flush(ep.observation_at(end));
}

}  // namespace detail

/// Per-subgoal demonstration pools plus augmentation pools.
///
/// For a subgoal with a required item, rewards become pseudo-rewards (or
/// pseudo + env reward in additive mode) and the step completing the
/// subgoal is terminal. A flat subgoal (no item) keeps environment rewards.
inline SplitResult split_demos(const std::vector<Episode>& demos, const SubtaskChain& chain, int n, double gamma,
                               RewardMode mode = RewardMode::replace) {
  if (demos.empty()) throw ContractError("split_demos: no demonstrations");
  if (chain.empty()) throw ContractError("split_demos: empty chain");
  SplitResult result;
  for (const auto& g : chain.subgoals) result.per_subgoal[g.name];

  for (const auto& ep : demos) {
    const auto owner = attribute_steps(ep, chain, &result.uncovered_steps);
    const std::size_t T = ep.steps.size();

    // Cumulative acquisitions after each step, for termination flags.
    std::vector<Inventory> gains(T);
    std::vector<Inventory> after(T);
    Inventory acquired, prev;
    for (std::size_t t = 0; t < T; ++t) {
      gains[t] = inventory_gains(prev, ep.steps[t].inventory);
      for (const auto& [item, k] : gains[t]) acquired[item] += k;
      after[t] = acquired;
      prev = ep.steps[t].inventory;
    }

    for (std::size_t gi = 0; gi < chain.subgoals.size(); ++gi) {
      const SubgoalId& g = chain.subgoals[gi];
      std::vector<double> own_rewards(T), zero(T, 0.0);
      std::vector<bool> own_done(T), env_done(T);
      for (std::size_t t = 0; t < T; ++t) {
        const double pr = pseudo_reward(gains[t], g);
        if (g.required_item.empty())
          own_rewards[t] = ep.steps[t].reward;
        else
          own_rewards[t] = mode == RewardMode::replace ? pr : pr + ep.steps[t].reward;
        const bool completes = !g.required_item.empty() && subgoal_met(g, after[t]) &&
                               (t == 0 ? !subgoal_met(g, {}) : !subgoal_met(g, after[t - 1]));
        own_done[t] = ep.steps[t].done || completes;
        env_done[t] = ep.steps[t].done;
      }
      auto& data = result.per_subgoal[g.name];
      // Walk maximal runs of equal ownership.
      std::size_t begin = 0;
      while (begin < T) {
        std::size_t end = begin + 1;
        while (end < T && owner[end] == owner[begin]) ++end;
        if (owner[begin] == static_cast<int>(gi))
          detail::emit_segment(ep, begin, end, own_rewards, own_done, g.name, 1, n, gamma, data.demo);
        else
          detail::emit_segment(ep, begin, end, zero, env_done, g.name, 0, n, gamma, data.extra);
        begin = end;
      }
    }
  }
  return result;
}

}  // namespace forger

#endif  // FORGER_HIERARCHY_SPLIT_HPP_
