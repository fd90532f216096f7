// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset (e.g. `acceptance 1 3 11`); --strict turns any FAIL into exit 1; --report FILE copies
// the verdict lines to FILE.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <unistd.h>
#include <sstream>

#include "forger/harness/demos.hpp"
#include "forger/harness/experiment.hpp"
#include "forger/harness/metrics.hpp"
#include "forger/harness/presets.hpp"
#include "forger/harness/stats.hpp"
#include "forger/replay/structured_buffer.hpp"
#include "oracles.hpp"

using namespace forger;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr int kGradInstances = 25;
constexpr double kGradSeconds = 30.0;
constexpr double kOracleTol = 1e-10;
constexpr int kOracleCases = 100;
constexpr double kChiAlpha = 0.01;
constexpr long kChiDraws = 100000;
constexpr double kChainTol = 1e-3;
constexpr long kChainSteps = 50000;
constexpr double kChainSeconds = 10.0;
constexpr int kChainSeeds = 20;
constexpr double kQualityAlpha = 0.05;
constexpr int kQualitySeeds = 40;
constexpr double kQualitySeconds = 600.0;
constexpr int kCleanSeeds = 10;
constexpr double kDiscretizationAlpha = 0.05;
constexpr int kDiscretizationSeeds = 10;
constexpr double kAugmentationAlpha = 0.1;
constexpr int kAugmentationSeeds = 6;
constexpr int kSolvedWindow = 10;
constexpr int kSolvedInWindow = 8;
constexpr double kFullChainShare = 0.5;
constexpr double kFullChainSeconds = 1200.0;
constexpr std::uint64_t kFirstSeed = 100;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> final_returns(const ExperimentConfig& cfg, int seeds) {
  std::vector<double> out;
  for (int s = 0; s < seeds; ++s) {
    const auto r = run_experiment(cfg, kFirstSeed + static_cast<std::uint64_t>(s));
    if (!r.metrics.error.empty()) throw std::runtime_error("run aborted: " + r.metrics.error);
    out.push_back(mean_of_last(r.metrics.episode_rewards, 100));
  }
  return out;
}

ExperimentConfig with_schedule(ExperimentConfig c, ForgettingSchedule s) {
  c.agent.schedule = s;
  return c;
}

// 1. finite-difference gradient check
Verdict gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < kGradInstances; ++i)
    worst = std::max(worst, oracle::check_gradients(oracle::smooth_instance(rng)).max_rel_error);
  const double secs = since(t0);
  return {worst < kGradTol && secs < kGradSeconds,
          fmt("max relative error %.3g over %d instances (< %g), %.1f s (< %g s)", worst, kGradInstances, kGradTol,
              secs, kGradSeconds)};
}

// 2. oracle equivalence for n-step returns, double-Q targets, margin and L2
Verdict oracle_equivalence() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double nstep = 0.0, dq = 0.0, mg = 0.0, l2 = 0.0, total = 0.0;
  for (int c = 0; c < kOracleCases; ++c) {
    const int len = 1 + static_cast<int>(rng() % 30), n = 1 + static_cast<int>(rng() % 10);
    const double gamma = 0.5 + 0.5 * std::abs(u(rng));
    const bool terminal = rng() % 2 == 0;
    std::vector<double> rewards(static_cast<std::size_t>(len));
    std::vector<bool> dones(static_cast<std::size_t>(len), false);
    for (auto& r : rewards) r = u(rng);
    if (terminal) dones.back() = true;
    NStepAccumulator acc(n, gamma);
    std::vector<Transition> out;
    for (int t = 0; t < len; ++t) {
      Transition tr;
      tr.obs = {static_cast<double>(t)};
      tr.next_obs = {static_cast<double>(t + 1)};
      tr.reward = rewards[static_cast<std::size_t>(t)];
      tr.done = dones[static_cast<std::size_t>(t)];
      acc.push(tr, out);
    }
    acc.flush(out);
    if (out.size() != rewards.size()) return {false, "n-step accumulator dropped transitions"};
    for (std::size_t t = 0; t < out.size(); ++t)
      nstep = std::max(nstep, std::abs(out[t].n_return - oracle::nstep(rewards, dones, t, n, gamma)));

    const auto in = oracle::random_instance(rng);
    for (const auto& t : in.batch) {
      const auto y = double_q_target(t, in.online, in.target, in.lw.gamma);
      const auto [y1, yn] = oracle::double_q(t, in.online, in.target, in.lw.gamma);
      dq = std::max({dq, std::abs(y.y1 - y1), std::abs(y.yn - yn)});
      std::vector<double> q(static_cast<std::size_t>(2 + rng() % 6));
      for (auto& x : q) x = 3.0 * u(rng);
      const int expert = static_cast<int>(rng() % q.size()), mask = static_cast<int>(rng() % 2);
      const double l = std::abs(u(rng));
      mg = std::max(mg, std::abs(margin_loss(q, expert, l, mask) - oracle::margin(q, expert, l, mask)));
    }
    for (bool biases : {false, true})
      l2 = std::max(l2, std::abs(in.online.l2(biases) - oracle::l2(in.online, biases)));
    std::vector<const Transition*> ptrs;
    for (const auto& t : in.batch) ptrs.push_back(&t);
    auto grad = in.online.zero_grad();
    const double got = composite_loss_and_grads<FeedForwardQ>(ptrs, in.weights, in.online, in.target, in.lw, grad).loss;
    total = std::max(total, std::abs(got - oracle::composite_loss(in.batch, in.weights, in.online, in.target, in.lw)));
  }
  const double worst = std::max({nstep, dq, mg, l2, total});
  return {worst < kOracleTol, fmt("%d cases; max |diff| n-step %.2g, double-Q %.2g, margin %.2g, L2 %.2g, loss %.2g "
                                  "(< %g)",
                                  kOracleCases, nstep, dq, mg, l2, total, kOracleTol)};
}

Transition buffered(Source src, double tag) {
  Transition t;
  t.obs = t.next_obs = t.n_obs = {tag};
  t.subgoal = "g";
  t.source = src;
  t.margin_mask = src == Source::demo ? 1 : 0;
  return t;
}

// 3. batch composition and proportional sampling
Verdict sampler() {
  StructuredReplayBuffer b;
  b.add_subgoal("g");
  for (int i = 0; i < 50; ++i) b.insert(buffered(Source::demo, i));
  for (int i = 0; i < 60; ++i) b.insert(buffered(Source::agent, 1000 + i));
  std::mt19937_64 rng(5);
  std::string fractions;
  bool exact = true;
  for (double rho : {0.0, 0.25, 0.5, 1.0}) {
    const double expected = std::floor(rho * 32.0 + 0.5) / 32.0;
    for (int i = 0; i < 1000; ++i) {
      int demo = 0;
      for (const auto& s : b.sample_batch("g", 32, rho, 0.6, rng)) demo += s.id.pool == Pool::demo;
      exact = exact && static_cast<double>(demo) / 32.0 == expected;
    }
    fractions += fmt(" rho=%g->%g", rho, expected);
  }

  StructuredReplayBuffer p;
  p.add_subgoal("g");
  const std::vector<double> td{0.0, 0.2, 0.5, 1.0, 3.0, 10.0};
  for (std::size_t i = 0; i < td.size(); ++i) p.insert(buffered(Source::agent, static_cast<double>(i)));
  std::vector<SampleId> ids;
  for (std::size_t i = 0; i < td.size(); ++i) ids.push_back({"g", Pool::agent, i, p.partition("g", Pool::agent).serial(i)});
  p.update_priorities(ids, td);
  const double alpha = p.config().alpha, eps = p.config().eps_agent;
  std::vector<double> probs;
  double z = 0.0;
  for (double d : td) z += probs.emplace_back(std::pow(d + eps, alpha));
  for (auto& x : probs) x /= z;
  std::vector<long> counts(td.size(), 0);
  for (long drawn = 0; drawn < kChiDraws; drawn += 50)
    for (const auto& s : p.sample_pools("g", {{Pool::agent, 50}}, 0.6, rng)) ++counts[s.id.slot];
  const auto chi = stats::chi_square(counts, probs);
  return {exact && alpha == 0.4 && chi.p_value > kChiAlpha,
          fmt("demo fraction exact over 4000 batches: %s (%s); chi-square %.3f, p = %.3f (> %g), alpha %.2g",
              exact ? "yes" : "no", fractions.c_str() + 1, chi.statistic, chi.p_value, kChiAlpha, alpha)};
}

// 4. tabular double Q on the 5-state chain
Verdict tabular_chain() {
  const auto t0 = Clock::now();
  const auto run = oracle::learn_chain(oracle::ChainMdp{}, kChainSteps, kChainTol, 1);
  const double secs = since(t0);
  return {run.max_error < kChainTol && secs < kChainSeconds,
          fmt("max |Q - Q*| = %.3g after %ld steps (< %g within %ld), %.2f s", run.max_error, run.steps, kChainTol,
              kChainSteps, secs)};
}

// 5. chain extraction
Verdict chain_extraction() {
  const auto cfg = craftworld_default(5);
  std::vector<std::string> recipe;
  for (const auto& r : cfg.recipes) recipe.push_back(r.output);
  int matched = 0;
  for (int s = 0; s < kChainSeeds; ++s) {
    const auto ex = extract_chain(generate_demos(cfg, ExpertConfig{}, 10, 500 + static_cast<std::uint64_t>(s)));
    std::vector<std::string> got;
    for (const auto& g : ex.chain.subgoals) got.push_back(g.name);
    matched += got == recipe;
  }
  std::mt19937_64 rng(31);
  int synthetic = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    const auto raw = oracle::back_edge_sequences(rng, {"a", "b", "c", "d", "e"}, 8);
    std::vector<std::vector<ItemEvent>> seqs;
    for (const auto& r : raw) seqs.push_back(extract_events(oracle::item_episode(r)));
    std::vector<std::string> got;
    for (const auto& g : graph_to_chain(build_graph(seqs), seqs).subgoals) got.push_back(g.name);
    synthetic += got == oracle::first_occurrence_order(raw);
  }
  return {matched == kChainSeeds && synthetic == kOracleCases,
          fmt("recipe order from %d/%d clean demo sets; %d/%d back-edge cases match the first-occurrence oracle",
              matched, kChainSeeds, synthetic, kOracleCases)};
}

// 6. corrupted demos: linear forgetting beats constant 0.5
Verdict quality() {
  const auto t0 = Clock::now();
  const auto base = lineworld_ablation(7, 0.5);
  const auto lin = final_returns(with_schedule(base, ForgettingSchedule::linear(50)), kQualitySeeds);
  const auto con = final_returns(with_schedule(base, ForgettingSchedule::constant(0.5)), kQualitySeeds);
  const auto t = stats::paired_t_greater(lin, con);
  const double secs = since(t0);
  return {stats::mean(lin) > stats::mean(con) && t.p_value < kQualityAlpha && secs < kQualitySeconds,
          fmt("%d seeds: linear(50) %.3f vs constant(0.5) %.3f, paired p = %.4f (< %g), %.0f s (< %g s)",
              kQualitySeeds, stats::mean(lin), stats::mean(con), t.p_value, kQualityAlpha, secs, kQualitySeconds)};
}

// 7. clean demos, fine bins: linear not worse than constant by more than one pooled sd
Verdict clean_non_regression() {
  const auto base = lineworld_ablation(7, 0.0);
  const auto lin = final_returns(with_schedule(base, ForgettingSchedule::linear(50)), kCleanSeeds);
  const auto con = final_returns(with_schedule(base, ForgettingSchedule::constant(0.1)), kCleanSeeds);
  const double sd = stats::pooled_stddev(lin, con), gap = stats::mean(con) - stats::mean(lin);
  return {gap <= sd, fmt("%d seeds: linear(50) %.3f vs constant(0.1) %.3f, shortfall %.3f (<= pooled sd %.3f)",
                         kCleanSeeds, stats::mean(lin), stats::mean(con), gap, sd)};
}

// 8. coarse bins: linear forgetting beats constant 0.1
Verdict discretization() {
  const auto base = lineworld_ablation(3, 0.0);
  const auto lin = final_returns(with_schedule(base, ForgettingSchedule::linear(50)), kDiscretizationSeeds);
  const auto con = final_returns(with_schedule(base, ForgettingSchedule::constant(0.1)), kDiscretizationSeeds);
  const auto t = stats::paired_t_greater(lin, con);
  return {stats::mean(lin) > stats::mean(con) && t.p_value < kDiscretizationAlpha,
          fmt("%d seeds, K=3: linear(50) %.3f vs constant(0.1) %.3f, paired p = %.4f (< %g)", kDiscretizationSeeds,
              stats::mean(lin), stats::mean(con), t.p_value, kDiscretizationAlpha)};
}

// Attempts of subgoal g until it is solved in kSolvedInWindow of the last
// kSolvedWindow attempts; the episode budget when that never happens.
double episodes_to_solve(const RunMetrics& m, const std::string& g, int budget) {
  std::vector<int> ok;
  for (const auto& r : m.rows)
    if (r.subgoal == g) ok.push_back(r.solved ? 1 : 0);
  int window = 0;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    window += ok[i];
    if (i >= static_cast<std::size_t>(kSolvedWindow)) window -= ok[i - kSolvedWindow];
    if (i + 1 >= static_cast<std::size_t>(kSolvedWindow) && window >= kSolvedInWindow) return static_cast<double>(i + 1);
  }
  return budget;
}

// 9. augmentation speeds up the planks subgoal
Verdict augmentation() {
  const auto preset = make_preset("augmentation");
  std::vector<double> with, without;
  for (const auto& cell : preset.cells)
    for (int s = 0; s < kAugmentationSeeds; ++s) {
      const auto r = run_experiment(cell.config, kFirstSeed + static_cast<std::uint64_t>(s));
      if (!r.metrics.error.empty()) throw std::runtime_error("run aborted: " + r.metrics.error);
      (cell.config.agent.extra_fraction > 0 ? with : without)
          .push_back(episodes_to_solve(r.metrics, "planks", cell.config.agent.episodes));
    }
  const auto t = stats::paired_t_greater(without, with);
  return {stats::mean(with) < stats::mean(without) && t.p_value < kAugmentationAlpha,
          fmt("%d seeds: planks solved after %.2f attempts with extra 0.25 vs %.2f without, paired p = %.3f (< %g)",
              kAugmentationSeeds, stats::mean(with), stats::mean(without), t.p_value, kAugmentationAlpha)};
}

// 10. full 5-subgoal chain
Verdict full_chain() {
  const auto t0 = Clock::now();
  const auto cell = make_preset("full-chain").cells.front();
  const auto r = run_experiment(cell.config, kFirstSeed);
  if (!r.metrics.error.empty()) return {false, "run aborted: " + r.metrics.error};
  const int n = cell.config.eval_episodes;
  const auto s = evaluate_policies(cell.config.env, r.extraction.chain, r.policies, n, 0);
  bool monotone = true;
  std::string counts;
  for (std::size_t g = 0; g < s.completion_counts.size(); ++g) {
    if (g > 0 && s.completion_counts[g] > s.completion_counts[g - 1]) monotone = false;
    counts += fmt("%s%s=%d", g ? " " : "", r.extraction.chain.subgoals[g].name.c_str(), s.completion_counts[g]);
  }
  const double secs = since(t0);
  return {r.extraction.chain.size() == 5 && s.all_completed >= kFullChainShare * n && monotone &&
              secs < kFullChainSeconds,
          fmt("all subgoals in %d/%d episodes (>= %g); counts %s (%s); %.0f s (< %g s)", s.all_completed, n,
              kFullChainShare * n, counts.c_str(), monotone ? "non-increasing" : "NOT non-increasing", secs,
              kFullChainSeconds)};
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// 11. byte-identical metrics and demo files for repeated runs
Verdict determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("forger-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::vector<ExperimentConfig> configs{lineworld_ablation(7, 0.2), craftworld_chain(3)};
  for (auto& c : configs) {
    c.agent.imitation_steps = 300;
    c.agent.episodes = 15;
    c.demo_episodes = 5;
  }
  int identical = 0, compared = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::vector<std::string> bytes;
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = dir / ("run" + std::to_string(i) + "_" + std::to_string(rep));
      save_run(out, run_experiment(configs[i], 7));
      bytes.push_back(file_bytes(out / "metrics.csv") + file_bytes(out / "policy_0.qnet"));
    }
    identical += bytes[0] == bytes[1] && !bytes[0].empty();
    ++compared;
    std::vector<std::string> demos;
    for (int rep = 0; rep < 2; ++rep) {
      const auto path = dir / ("demos" + std::to_string(i) + "_" + std::to_string(rep) + ".jsonl");
      save_demos(path.string(), generate_demos(configs[i].env, ExpertConfig{0.3}, 4, 11),
                 DemoHeader{env_name(configs[i].env), 4, 11, 0.3});
      demos.push_back(file_bytes(path));
    }
    identical += demos[0] == demos[1] && !demos[0].empty();
    ++compared;
  }
  std::filesystem::remove_all(dir);
  return {identical == compared, fmt("%d/%d repeated metrics/checkpoint/demo files byte-identical", identical, compared)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient check", gradients},
      {"oracle equivalence", oracle_equivalence},
      {"sampler laws", sampler},
      {"tabular double Q", tabular_chain},
      {"chain extraction", chain_extraction},
      {"quality ablation", quality},
      {"clean-demo non-regression", clean_non_regression},
      {"discretization mismatch", discretization},
      {"augmentation ablation", augmentation},
      {"full chain", full_chain},
      {"determinism", determinism}};
  bool strict = false;
  std::set<int> selected;
  std::ofstream report;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0)
      strict = true;
    else if (std::strcmp(argv[i], "--report") == 0 && i + 1 < argc)
      report.open(argv[++i]);
    else
      selected.insert(std::atoi(argv[i]));
  }
  int passed = 0, run = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    ++run;
    passed += v.pass;
    const auto line = fmt("criterion %2d %s  %-26s %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL",
                             criteria[i].first, v.detail.c_str(), since(t0));
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    report << line << std::flush;
  }
  const auto total = fmt("acceptance: %d/%d PASS\n", passed, run);
  std::fputs(total.c_str(), stdout);
  report << total;
  return strict && passed != run ? 1 : 0;
}
