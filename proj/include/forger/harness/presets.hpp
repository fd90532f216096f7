#ifndef FORGER_HARNESS_PRESETS_HPP_
#define FORGER_HARNESS_PRESETS_HPP_

#include <string>
#include <vector>

#include "forger/harness/config.hpp"

namespace forger {

/// One grid cell of a preset. Cells sharing a `chart` are drawn together.
struct PresetCell {
  std::string chart;
  std::string label;
  ExperimentConfig config;
};

struct ExperimentPreset {
  std::string name;
  std::vector<PresetCell> cells;
  std::vector<std::uint64_t> seeds;
};

inline std::vector<std::string> preset_names() {
  return {"quality-ablation", "schedule-comparison", "discretization", "augmentation", "full-chain"};
}

/// LineWorld ablation base: small demo sets, scaled rewards.
inline ExperimentConfig lineworld_ablation(int bins, double noise) {
  ExperimentConfig c;
  LineWorldConfig lw;
  lw.action_bins = bins;
  c.env = lw;
  c.expert.corruption_prob = noise;
  c.demo_episodes = 5;
  c.chain_source = ChainSource::flat;
  c.agent.imitation_steps = 10000;
  c.agent.episodes = 300;
  c.agent.reward_scale = 0.01;
  c.eval_episodes = 100;
  return c;
}

/// CraftWorld base for the hierarchical presets.
inline ExperimentConfig craftworld_chain(int length) {
  ExperimentConfig c;
  c.env = craftworld_default(length);
  c.craft_chain_length = length;
  c.demo_episodes = 100;
  c.agent.imitation_steps = 5000;
  c.agent.episodes = 300;
  c.agent.hidden = {128, 128};
  c.agent.reward_scale = 1.0;
  c.agent.adam.step_size = 1e-3;
  c.eval_episodes = 100;
  return c;
}

/// The four forgetting regimes compared throughout.
inline std::vector<std::pair<std::string, ForgettingSchedule>> schedule_regimes() {
  return {{"constant-0.5", ForgettingSchedule::constant(0.5)},
          {"full-forget", ForgettingSchedule::full_forget()},
          {"linear-50", ForgettingSchedule::linear(50)},
          {"linear-250", ForgettingSchedule::linear(250)}};
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < count; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
  return s;
}

inline ExperimentPreset make_preset(const std::string& name) {
  ExperimentPreset p;
  p.name = name;
  if (name == "quality-ablation") {
    for (const auto& [tier, noise] : std::vector<std::pair<std::string, double>>{{"high", 0.0}, {"medium", 0.2}, {"low", 0.5}})
      for (const auto& [label, sched] : schedule_regimes()) {
        auto c = lineworld_ablation(7, noise);
        c.agent.schedule = sched;
        p.cells.push_back({"quality-" + tier, label, c});
      }
    p.seeds = seed_range(100, 4);
  } else if (name == "schedule-comparison") {
    for (const auto& [label, sched] : schedule_regimes()) {
      auto c = craftworld_chain(3);
      c.agent.schedule = sched;
      p.cells.push_back({"schedules", label, c});
    }
    p.seeds = seed_range(100, 4);
  } else if (name == "discretization") {
    for (int bins : {3, 7, 21})
      for (const auto& [label, sched] : std::vector<std::pair<std::string, ForgettingSchedule>>{
               {"linear-50", ForgettingSchedule::linear(50)}, {"constant-0.1", ForgettingSchedule::constant(0.1)}}) {
        auto c = lineworld_ablation(bins, 0.0);
        c.agent.schedule = sched;
        p.cells.push_back({"bins-" + std::to_string(bins), label, c});
      }
    p.seeds = seed_range(100, 4);
  } else if (name == "augmentation") {
    // scarce demos and a short imitation phase, where extra data should matter most
    for (double ef : {0.0, 0.25}) {
      auto c = craftworld_chain(3);
      c.demo_episodes = 3;
      c.agent.imitation_steps = 200;
      c.agent.episodes = 100;
      c.agent.extra_fraction = ef;
      p.cells.push_back({"augmentation", ef == 0.0 ? "no-augmentation" : "augmentation-0.25", c});
    }
    p.seeds = seed_range(100, 6);
  } else if (name == "full-chain") {
    auto c = craftworld_chain(5);
    c.agent.schedule = ForgettingSchedule::linear(1000);
    p.cells.push_back({"full-chain", "linear-1000", c});
    p.seeds = seed_range(100, 4);
  } else {
    throw ContractError("unknown preset '" + name + "'");
  }
  return p;
}

}  // namespace forger

#endif  // FORGER_HARNESS_PRESETS_HPP_
