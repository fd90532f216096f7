#ifndef FORGER_HARNESS_DEMOS_HPP_
#define FORGER_HARNESS_DEMOS_HPP_

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forger/agent/agent.hpp"
#include "forger/envs/environment.hpp"
#include "forger/envs/expert.hpp"

namespace forger {

/// Rolls out the scripted expert. On LineWorld the expert acts with its raw
/// continuous thrust; the recorded action is that thrust's bin.
inline Episode record_expert_episode(const EnvConfig& cfg, const ExpertConfig& ec, std::uint64_t seed) {
  ec.validate();
  Env env = env_reset(cfg, seed);
  std::mt19937_64 rng(mix_seed(seed, 77));
  Episode ep;
  ep.env_name = env_name(cfg);
  ep.seed = seed;
  while (!env.done()) {
    EpisodeStep step;
    step.obs = env.observe();
    const ExpertAction ea = scripted_expert(env, ec, rng);
    step.action = ea.action;
    step.raw_action = ea.raw;
    StepResult res = ea.raw ? env.step_continuous(*ea.raw) : env.step(ea.action);
    step.reward = res.reward;
    step.done = res.done;
    step.inventory = env.inventory();
    ep.steps.push_back(std::move(step));
    if (res.done) ep.final_obs = std::move(res.obs);
  }
  return ep;
}

inline std::vector<Episode> generate_demos(const EnvConfig& cfg, const ExpertConfig& ec, int episodes,
                                           std::uint64_t seed) {
  if (episodes < 0) throw ContractError("gen-demos: negative episode count");
  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i)
    out.push_back(record_expert_episode(cfg, ec, mix_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

/// Re-labels LineWorld demos for a different agent discretization using the
/// stored raw actions.
inline std::vector<Episode> rebin_demos(std::vector<Episode> demos, int bins) {
  for (auto& ep : demos)
    for (auto& s : ep.steps)
      if (s.raw_action) s.action = discretize(*s.raw_action, bins);
  return demos;
}

// --- JSONL ------------------------------------------------------------------

struct DemoHeader {
  std::string env;
  int episodes = 0;
  std::uint64_t seed = 0;
  double expert_noise = 0.0;
};

inline nlohmann::json episode_to_json(const Episode& ep, int id) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : ep.steps) {
    nlohmann::json j;
    j["obs"] = s.obs;
    j["action"] = s.action.index;
    if (s.raw_action) j["raw_action"] = *s.raw_action;
    j["reward"] = s.reward;
    j["inventory"] = s.inventory;
    j["done"] = s.done;
    steps.push_back(std::move(j));
  }
  return {{"episode_id", id}, {"env", ep.env_name}, {"seed", ep.seed}, {"steps", std::move(steps)},
          {"final_obs", ep.final_obs}};
}

inline Episode episode_from_json(const nlohmann::json& j) {
  Episode ep;
  ep.env_name = j.at("env").get<std::string>();
  ep.seed = j.at("seed").get<std::uint64_t>();
  ep.final_obs = j.at("final_obs").get<Observation>();
  for (const auto& s : j.at("steps")) {
    EpisodeStep step;
    step.obs = s.at("obs").get<Observation>();
    step.action.index = s.at("action").get<int>();
    if (s.contains("raw_action")) step.raw_action = s.at("raw_action").get<double>();
    step.reward = s.at("reward").get<double>();
    step.inventory = s.at("inventory").get<Inventory>();
    step.done = s.at("done").get<bool>();
    ep.steps.push_back(std::move(step));
  }
  std::size_t terminals = 0;
  for (const auto& s : ep.steps) terminals += s.done ? 1 : 0;
  if (!ep.steps.empty() && (terminals != 1 || !ep.steps.back().done))
    throw ContractError("episode must have exactly one terminal step, at the end");
  for (const auto& s : ep.steps)
    for (const auto& [item, n] : s.inventory)
      if (n < 0) throw ContractError("negative inventory count for " + item);
  return ep;
}

inline void write_demos(std::ostream& os, const std::vector<Episode>& demos, const DemoHeader& h) {
  nlohmann::json header{{"format", "forger-demos"}, {"version", 1},          {"env", h.env},
                        {"episodes", demos.size()}, {"seed", h.seed}, {"expert_noise", h.expert_noise}};
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < demos.size(); ++i) os << episode_to_json(demos[i], static_cast<int>(i)).dump() << '\n';
}

struct DemoFile {
  DemoHeader header;
  std::vector<Episode> episodes;
};

/// Parses a demo stream; errors carry the 1-based line number.
inline DemoFile read_demos(std::istream& is) {
  DemoFile out;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "forger-demos" || j.value("version", 0) != 1)
          throw ContractError("expected forger-demos header");
        out.header.env = j.at("env").get<std::string>();
        out.header.episodes = j.at("episodes").get<int>();
        out.header.seed = j.at("seed").get<std::uint64_t>();
        out.header.expert_noise = j.at("expert_noise").get<double>();
        have_header = true;
        continue;
      }
      out.episodes.push_back(episode_from_json(j));
    } catch (const std::exception& ex) {
      throw ContractError("demo file line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (!have_header) throw ContractError("demo file: missing header line");
  if (static_cast<int>(out.episodes.size()) != out.header.episodes)
    throw ContractError("demo file: header announces " + std::to_string(out.header.episodes) + " episodes, found " +
                        std::to_string(out.episodes.size()));
  return out;
}

inline void save_demos(const std::string& path, const std::vector<Episode>& demos, const DemoHeader& h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_demos(os, demos, h);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline DemoFile load_demos(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_demos(is);
}

/// Chain extracted from demo item events (used by extract-chain).
struct Extraction {
  SubtaskGraph graph;
  SubtaskChain chain;
};

inline Extraction extract_chain(const std::vector<Episode>& demos) {
  std::vector<std::vector<ItemEvent>> seqs;
  for (std::size_t i = 0; i < demos.size(); ++i) seqs.push_back(extract_events(demos[i], static_cast<int>(i)));
  Extraction out;
  out.graph = build_graph(seqs);
  out.chain = graph_to_chain(out.graph, seqs);
  return out;
}

}  // namespace forger

#endif  // FORGER_HARNESS_DEMOS_HPP_
