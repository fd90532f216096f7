#ifndef FORGER_HARNESS_EXPERIMENT_HPP_
#define FORGER_HARNESS_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "forger/agent/agent.hpp"
#include "forger/approx/checkpoint.hpp"
#include "forger/harness/config.hpp"
#include "forger/harness/demos.hpp"
#include "forger/harness/metrics.hpp"
#include "forger/hierarchy/chain_io.hpp"

namespace forger {

/// Evaluation episodes draw from one seed pool shared by every run, so
/// checkpoints from different runs see the same maps.
inline std::uint64_t eval_seed(std::uint64_t pool, int i) { return mix_seed(pool ^ 0xE7A1ULL, static_cast<std::uint64_t>(i)); }

struct EvalSummary {
  std::vector<EvaluationEpisode> episodes;
  std::vector<int> completion_counts;  // per subgoal
  int all_completed = 0;
  double mean_reward = 0.0;
};

inline EvalSummary evaluate_policies(const EnvConfig& env, const SubtaskChain& chain,
                                     const std::vector<FeedForwardQ>& policies, int episodes,
                                     std::uint64_t pool = 0) {
  if (policies.size() != chain.size()) throw ContractError("evaluate: one checkpoint per subgoal required");
  for (const auto& p : policies) {
    const auto sz = p.sizes();
    if (sz.front() != env_obs_dim(env) || sz.back() != env_num_actions(env))
      throw ContractError("evaluate: checkpoint shape does not match the environment");
  }
  EvalSummary s;
  s.completion_counts.assign(chain.size(), 0);
  for (int i = 0; i < episodes; ++i) {
    auto ep = evaluate_episode(env, chain, [&](std::size_t g) -> const FeedForwardQ& { return policies[g]; },
                               eval_seed(pool, i));
    bool all = true;
    for (std::size_t g = 0; g < chain.size(); ++g) {
      s.completion_counts[g] += ep.completed[g] ? 1 : 0;
      all = all && ep.completed[g];
    }
    s.all_completed += all ? 1 : 0;
    s.mean_reward += ep.env_reward;
    s.episodes.push_back(std::move(ep));
  }
  if (episodes > 0) s.mean_reward /= episodes;
  return s;
}

inline void write_evaluation(std::ostream& os, const SubtaskChain& chain, const EvalSummary& s) {
  os << "episode,env_reward,steps";
  for (const auto& g : chain.subgoals) os << ",done_" << g.name;
  os << '\n';
  for (std::size_t i = 0; i < s.episodes.size(); ++i) {
    const auto& e = s.episodes[i];
    os << i << ',' << format_double(e.env_reward) << ',' << e.steps;
    for (bool c : e.completed) os << ',' << (c ? 1 : 0);
    os << '\n';
  }
}

struct RunResult {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  Extraction extraction;  // graph is empty for a flat chain
  RunMetrics metrics;
  std::vector<FeedForwardQ> policies;
};

inline std::vector<Episode> experiment_demos(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<Episode> demos;
  if (!cfg.demo_file.empty()) {
    demos = load_demos(cfg.demo_file).episodes;
    if (!demos.empty() && demos.front().env_name != env_name(cfg.env))
      throw ContractError("demo file was recorded on " + demos.front().env_name + ", config uses " + env_name(cfg.env));
  } else {
    demos = generate_demos(cfg.env, cfg.expert, cfg.demo_episodes, mix_seed(cfg.demo_seed, seed));
  }
  if (const auto* lw = std::get_if<LineWorldConfig>(&cfg.env)) demos = rebin_demos(std::move(demos), lw->action_bins);
  return demos;
}

/// Chain for a run. Extraction on an environment without items (LineWorld)
/// yields the flat one-subgoal chain.
inline Extraction experiment_chain(const ExperimentConfig& cfg, const std::vector<Episode>& demos) {
  switch (cfg.chain_source) {
    case ChainSource::flat: return {{}, SubtaskChain::flat()};
    case ChainSource::file: {
      auto f = load_chain(cfg.chain_file);
      return {f.graph.value_or(SubtaskGraph{}), f.chain};
    }
    case ChainSource::extract: {
      bool any_items = false;
      for (const auto& ep : demos)
        for (const auto& s : ep.steps) any_items = any_items || !s.inventory.empty();
      if (!any_items) return {{}, SubtaskChain::flat()};
      return extract_chain(demos);
    }
  }
  return {{}, SubtaskChain::flat()};
}

/// demos -> chain -> imitation -> forging. The seed drives demo generation,
/// network init, exploration and environment maps.
inline RunResult run_experiment(ExperimentConfig cfg, std::uint64_t seed) {
  cfg.agent.seed = seed;
  RunResult out;
  out.seed = seed;
  const auto demos = experiment_demos(cfg, seed);
  out.extraction = experiment_chain(cfg, demos);
  ForgerAgent agent(cfg.env, out.extraction.chain, cfg.agent);
  agent.load_demos(demos);
  out.metrics = agent.run();
  for (std::size_t i = 0; i < out.extraction.chain.size(); ++i) out.policies.push_back(agent.policy(i));
  out.config = std::move(cfg);
  return out;
}

inline std::string policy_file(std::size_t i) { return "policy_" + std::to_string(i) + ".qnet"; }

/// Writes config.json, chain.txt, metrics.csv and one checkpoint per subgoal.
inline void save_run(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  {
    auto j = experiment_to_json(r.config);
    j["agent"]["seed"] = r.seed;
    std::ofstream os(dir / "config.json", std::ios::binary);
    os << j.dump(2) << '\n';
  }
  save_chain((dir / "chain.txt").string(), r.extraction.chain,
             r.extraction.graph.vertices.empty() ? nullptr : &r.extraction.graph);
  save_metrics((dir / "metrics.csv").string(), r.metrics);
  for (std::size_t i = 0; i < r.policies.size(); ++i) save_checkpoint((dir / policy_file(i)).string(), r.policies[i]);
  if (!r.metrics.error.empty()) {
    std::ofstream os(dir / "error.txt", std::ios::binary);
    os << r.metrics.error << '\n';
  }
}

struct SavedRun {
  ExperimentConfig config;
  SubtaskChain chain;
  std::vector<FeedForwardQ> policies;
};

inline SavedRun load_run(const std::filesystem::path& dir) {
  SavedRun s;
  s.config = load_experiment((dir / "config.json").string());
  s.chain = load_chain((dir / "chain.txt").string()).chain;
  for (std::size_t i = 0; i < s.chain.size(); ++i) {
    const auto p = dir / policy_file(i);
    if (!std::filesystem::exists(p)) throw ContractError("missing checkpoint " + p.string());
    s.policies.push_back(load_checkpoint(p.string()));
  }
  return s;
}

}  // namespace forger

#endif  // FORGER_HARNESS_EXPERIMENT_HPP_
