#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "forger/harness/config.hpp"
#include "forger/harness/demos.hpp"
#include "forger/harness/experiment.hpp"
#include "forger/harness/metrics.hpp"
#include "forger/harness/plot.hpp"
#include "forger/harness/stats.hpp"

using namespace forger;

namespace {

std::string demo_text(const std::vector<Episode>& demos, const EnvConfig& env) {
  std::ostringstream os;
  write_demos(os, demos, DemoHeader{env_name(env), static_cast<int>(demos.size()), 3, 0.0});
  return os.str();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  LineWorldConfig lw;
  lw.max_steps = 40;
  c.env = lw;
  c.demo_episodes = 3;
  c.agent.hidden = {8};
  c.agent.imitation_steps = 30;
  c.agent.episodes = 4;
  c.eval_episodes = 3;
  return c;
}

}  // namespace

TEST(Demos, RoundTripIsLossless) {
  for (const EnvConfig env : {EnvConfig{craftworld_default(5)}, EnvConfig{LineWorldConfig{}}}) {
    const auto demos = generate_demos(env, ExpertConfig{0.2}, 4, 11);
    const auto text = demo_text(demos, env);
    std::istringstream is(text);
    const auto back = read_demos(is);
    ASSERT_EQ(back.episodes.size(), demos.size());
    EXPECT_EQ(back.header.env, env_name(env));
    for (std::size_t i = 0; i < demos.size(); ++i) {
      ASSERT_EQ(back.episodes[i].size(), demos[i].size());
      EXPECT_EQ(back.episodes[i].final_obs, demos[i].final_obs);
      for (std::size_t t = 0; t < demos[i].size(); ++t) {
        const auto& a = back.episodes[i].steps[t];
        const auto& b = demos[i].steps[t];
        EXPECT_EQ(a.obs, b.obs);
        EXPECT_EQ(a.action, b.action);
        EXPECT_EQ(a.raw_action, b.raw_action);
        EXPECT_EQ(a.reward, b.reward);
        EXPECT_EQ(a.inventory, b.inventory);
        EXPECT_EQ(a.done, b.done);
      }
    }
    EXPECT_EQ(demo_text(back.episodes, env), text);
  }
}

TEST(Demos, GenerationIsByteIdentical) {
  const EnvConfig env = craftworld_default(5);
  EXPECT_EQ(demo_text(generate_demos(env, ExpertConfig{0.5}, 3, 2), env),
            demo_text(generate_demos(env, ExpertConfig{0.5}, 3, 2), env));
  EXPECT_NE(demo_text(generate_demos(env, ExpertConfig{0.5}, 3, 2), env),
            demo_text(generate_demos(env, ExpertConfig{0.5}, 3, 3), env));
}

TEST(Demos, ZeroEpisodesIsHeaderOnly) {
  const EnvConfig env = LineWorldConfig{};
  const auto text = demo_text({}, env);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  std::istringstream is(text);
  EXPECT_TRUE(read_demos(is).episodes.empty());
}

TEST(Demos, MalformedLinesReportLineNumber) {
  const EnvConfig env = LineWorldConfig{};
  const auto good = demo_text(generate_demos(env, ExpertConfig{}, 2, 1), env);
  const auto first_nl = good.find('\n');
  const auto second_nl = good.find('\n', first_nl + 1);
  auto parse = [](const std::string& s) {
    return error_of([&] {
      std::istringstream is(s);
      read_demos(is);
    });
  };
  // truncated JSON on line 3
  EXPECT_NE(parse(good.substr(0, second_nl + 1) + "{\"env\":").find("line 3"), std::string::npos);
  // terminal flag removed from line 2
  std::string no_terminal = good;
  const auto pos = no_terminal.rfind("\"done\":true", second_nl);
  ASSERT_NE(pos, std::string::npos);
  no_terminal.replace(pos, 11, "\"done\":false");
  EXPECT_NE(parse(no_terminal).find("line 2"), std::string::npos);
  // header count mismatch
  EXPECT_NE(parse(good.substr(0, second_nl + 1)).find("announces 2"), std::string::npos);
  EXPECT_NE(parse("{\"format\":\"other\"}\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse("").find("missing header"), std::string::npos);
}

TEST(Demos, RebinUsesRawActions) {
  const auto demos = generate_demos(LineWorldConfig{}, ExpertConfig{}, 2, 4);
  const auto coarse = rebin_demos(demos, 3);
  for (std::size_t i = 0; i < demos.size(); ++i)
    for (std::size_t t = 0; t < demos[i].size(); ++t)
      EXPECT_EQ(coarse[i].steps[t].action, discretize(*demos[i].steps[t].raw_action, 3));
}

TEST(Config, DefaultsFromEmptyObject) {
  const auto c = parse_experiment_text("{}");
  EXPECT_TRUE(std::holds_alternative<LineWorldConfig>(c.env));
  EXPECT_EQ(c.agent.batch_size, 32);
  EXPECT_EQ(c.agent.loss.n, 10);
}

TEST(Config, ParsesNestedSections) {
  const auto c = parse_experiment_text(R"({
    "env": {"type": "craftworld", "chain_length": 3, "max_steps": 250},
    "expert": {"noise": 0.2},
    "agent": {"schedule": {"kind": "constant", "rho": 0.25}, "loss": {"n": 5}, "hidden": [32]},
    "evaluation": {"episodes": 7}
  })");
  const auto& cw = std::get<CraftWorldConfig>(c.env);
  EXPECT_EQ(cw.recipes.size(), 3u);
  EXPECT_EQ(cw.max_steps, 250);
  EXPECT_EQ(c.expert.corruption_prob, 0.2);
  EXPECT_EQ(c.agent.schedule.kind, ForgettingSchedule::Kind::constant);
  EXPECT_EQ(c.agent.schedule.rho0, 0.25);
  EXPECT_EQ(c.agent.loss.n, 5);
  EXPECT_EQ(c.agent.hidden, std::vector<int>{32});
  EXPECT_EQ(c.eval_episodes, 7);
}

TEST(Config, EveryProblemReportedTogether) {
  try {
    parse_experiment_text(R"({"bogus": 1, "agent": {"batch": 3, "episodes": "many", "schedule": {"kind": "cosine"}},
                              "expert": {"noise": 2}})");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    auto has = [&](const std::string& s) {
      return std::any_of(p.begin(), p.end(), [&](const std::string& x) { return x.find(s) != std::string::npos; });
    };
    EXPECT_TRUE(has("config.bogus: unknown key"));
    EXPECT_TRUE(has("agent.batch: unknown key"));
    EXPECT_TRUE(has("agent.episodes"));
    EXPECT_TRUE(has("agent.schedule.kind"));
    EXPECT_TRUE(has("expert.noise"));
    EXPECT_GE(p.size(), 5u);
  }
  EXPECT_THROW(parse_experiment_text("{not json"), ConfigError);
  EXPECT_THROW(parse_experiment_text(R"({"agent": {"learning_starts": 4}})"), ConfigError);
}

TEST(Config, ResolvedJsonRoundTrips) {
  auto c = tiny_experiment();
  c.agent.schedule = ForgettingSchedule::constant(0.1);
  const auto j = experiment_to_json(c);
  const auto back = parse_experiment(j);
  EXPECT_EQ(experiment_to_json(back), j);
  const auto cw = parse_experiment_text(R"({"env": {"type": "craftworld", "chain_length": 4}})");
  EXPECT_EQ(experiment_to_json(parse_experiment(experiment_to_json(cw))), experiment_to_json(cw));
}

TEST(Metrics, HeaderAndRoundTrip) {
  RunMetrics m;
  m.rows.push_back({0, "log", 1.0, 3.0, 0.25, 1.0, 0.1, 17, true, 0.5});
  m.rows.push_back({0, "planks", 2.0, 1.0, 1.0 / 3.0, 0.98, 0.1, 4, false, 0.1});
  std::stringstream ss;
  write_metrics(ss, m);
  std::string header;
  std::getline(std::istringstream(ss.str()), header);
  EXPECT_EQ(header, "episode,subgoal,env_reward,pseudo_reward,td_loss,demo_fraction,epsilon,steps");
  const auto rows = read_metrics(ss);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].td_loss, 1.0 / 3.0);
  EXPECT_EQ(rows[0].steps, 17);
  EXPECT_EQ(episode_returns(rows), std::vector<double>{3.0});
}

TEST(Metrics, InconsistentHeaderRejected) {
  std::istringstream is("episode,reward\n0,1\n");
  EXPECT_NE(error_of([&] { read_metrics(is, "run3"); }).find("run3: inconsistent header"), std::string::npos);
  std::istringstream short_row(std::string(kMetricsHeader) + "\n0,task,1\n");
  EXPECT_NE(error_of([&] { read_metrics(short_row); }).find("line 2"), std::string::npos);
}

TEST(Metrics, MeanOfLast) {
  EXPECT_DOUBLE_EQ(mean_of_last({1, 2, 3, 4}, 2), 3.5);
  EXPECT_DOUBLE_EQ(mean_of_last({1, 2}, 10), 1.5);
}

TEST(Stats, PairedTMatchesReference) {
  const auto t = stats::paired_t_greater({1, 2, 3, 4, 5.5}, {0, 0.5, 0, 1, 0});
  EXPECT_NEAR(t.t, 3.570429593154694, 1e-9);
  EXPECT_NEAR(t.p_value, 0.011683379956273854, 1e-9);
  EXPECT_EQ(t.dof, 4);
}

TEST(Stats, WelchMatchesReference) {
  const auto t = stats::welch_t_less({1, 2, 3, 4}, {2, 4, 6, 8.5});
  EXPECT_NEAR(t.t, -1.7127408306551661, 1e-9);
  EXPECT_NEAR(t.p_value, 0.0789571338412048, 1e-9);
}

TEST(Stats, ChiSquareMatchesReference) {
  const auto c = stats::chi_square({10, 20, 30}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(c.statistic, 10.0, 1e-9);
  EXPECT_NEAR(c.p_value, 0.006737946999085468, 1e-9);
}

TEST(Stats, PooledStddev) {
  EXPECT_NEAR(stats::pooled_stddev({1, 2, 3}, {2, 4, 6}), std::sqrt(0.5 * (1.0 + 4.0)), 1e-12);
}

TEST(Plot, TrailingMean) {
  EXPECT_EQ(trailing_mean({2, 4, 6, 8}, 2), (std::vector<double>{2, 3, 5, 7}));
}

TEST(Plot, BandOnlyForMultipleRuns) {
  std::ostringstream one, many;
  write_svg(one, {Curve{"linear", {{1, 2, 3, 4}}}}, "t");
  write_svg(many, {Curve{"linear", {{1, 2, 3, 4}, {2, 3, 4, 5}}}, Curve{"constant", {{0, 1, 0, 1}}}}, "t");
  EXPECT_EQ(one.str().find("<polygon"), std::string::npos);
  EXPECT_NE(many.str().find("<polygon"), std::string::npos);
  EXPECT_NE(many.str().find(">constant</text>"), std::string::npos);
}

TEST(Plot, SummaryIsMeanMinMax) {
  const auto s = summarize(Curve{"x", {{0, 0, 0}, {2, 2, 2}, {1, 1}}}, 1);
  ASSERT_EQ(s.mean.size(), 2u);
  EXPECT_EQ(s.mean[0], 1.0);
  EXPECT_EQ(s.lo[1], 0.0);
  EXPECT_EQ(s.hi[1], 2.0);
}

TEST(Experiment, RunIsDeterministicAndSavesArtifacts) {
  const auto dir = std::filesystem::temp_directory_path() / "forger_test_harness_run";
  std::filesystem::remove_all(dir);
  auto a = run_experiment(tiny_experiment(), 5);
  auto b = run_experiment(tiny_experiment(), 5);
  ASSERT_TRUE(a.metrics.error.empty()) << a.metrics.error;
  std::ostringstream ma, mb;
  write_metrics(ma, a.metrics);
  write_metrics(mb, b.metrics);
  EXPECT_EQ(ma.str(), mb.str());
  EXPECT_EQ(a.extraction.chain.subgoals, SubtaskChain::flat().subgoals);

  save_run(dir, a);
  for (const char* f : {"config.json", "chain.txt", "metrics.csv", "policy_0.qnet"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto saved = load_run(dir);
  EXPECT_EQ(saved.config.agent.seed, 5u);
  ASSERT_EQ(saved.policies.size(), 1u);
  const auto e1 = evaluate_policies(saved.config.env, saved.chain, saved.policies, 3);
  const auto e2 = evaluate_policies(saved.config.env, saved.chain, a.policies, 3);
  EXPECT_EQ(e1.mean_reward, e2.mean_reward);
  std::filesystem::remove_all(dir);
}

TEST(Experiment, EvaluateRandomPolicy) {
  const auto env_cfg = craftworld_default(3);
  const auto chain = extract_chain(generate_demos(env_cfg, ExpertConfig{}, 3, 1)).chain;
  std::vector<FeedForwardQ> policies;
  for (std::size_t i = 0; i < chain.size(); ++i)
    policies.emplace_back(std::vector<int>{env_obs_dim(env_cfg), 8, env_num_actions(env_cfg)}, i);
  const auto s = evaluate_policies(env_cfg, chain, policies, 5);
  ASSERT_EQ(s.episodes.size(), 5u);
  for (std::size_t g = 1; g < chain.size(); ++g) EXPECT_LE(s.completion_counts[g], s.completion_counts[g - 1]);
  std::ostringstream os;
  write_evaluation(os, chain, s);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "episode,env_reward,steps,done_log,done_planks,done_stick");
  policies.pop_back();
  EXPECT_THROW(evaluate_policies(env_cfg, chain, policies, 1), ContractError);
}
