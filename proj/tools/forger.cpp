// forger command line: gen-demos, extract-chain, train, evaluate, plot.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "forger/harness/config.hpp"
#include "forger/harness/demos.hpp"
#include "forger/harness/experiment.hpp"
#include "forger/harness/metrics.hpp"
#include "forger/harness/plot.hpp"
#include "forger/harness/presets.hpp"
#include "forger/harness/stats.hpp"

namespace fs = std::filesystem;
using namespace forger;

namespace {

struct Overrides {
  std::string schedule;
  int d = 0;
  double demo_ratio = -1.0;
  int episodes = -1;
  std::string env;
  double expert_noise = -1.0;
};

ForgettingSchedule::Kind schedule_kind(const std::string& s) {
  if (s == "linear") return ForgettingSchedule::Kind::linear;
  if (s == "constant") return ForgettingSchedule::Kind::constant;
  if (s == "full_forget" || s == "full-forget") return ForgettingSchedule::Kind::full_forget;
  throw ContractError("--schedule must be linear | constant | full_forget");
}

EnvConfig env_from_name(const std::string& name, int chain_length, int bins) {
  if (name == "lineworld") {
    LineWorldConfig lw;
    lw.action_bins = bins;
    return lw;
  }
  if (name == "craftworld") return craftworld_default(chain_length);
  throw ContractError("--env must be lineworld | craftworld");
}

void apply(const Overrides& o, ExperimentConfig& c) {
  if (!o.env.empty() && o.env != env_name(c.env)) c.env = env_from_name(o.env, c.craft_chain_length, 7);
  if (o.expert_noise >= 0) c.expert.corruption_prob = o.expert_noise;
  if (!o.schedule.empty()) c.agent.schedule.kind = schedule_kind(o.schedule);
  if (o.d > 0) c.agent.schedule.d = o.d;
  if (o.demo_ratio >= 0) {
    if (o.schedule.empty()) c.agent.schedule.kind = ForgettingSchedule::Kind::constant;
    c.agent.schedule.rho0 = o.demo_ratio;
  }
  if (o.episodes >= 0) c.agent.episodes = o.episodes;
  c.agent.validate();
  c.expert.validate();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto a = std::stoull(item.substr(0, dash)), b = std::stoull(item.substr(dash + 1));
      for (auto s = a; s <= b; ++s) out.push_back(s);
    } else {
      out.push_back(std::stoull(item));
    }
  }
  if (out.empty()) throw ContractError("--seeds: empty list");
  return out;
}

struct Job {
  ExperimentConfig config;
  std::uint64_t seed;
  fs::path dir;
};

int run_one(const Job& job) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  try {
    r = run_experiment(job.config, job.seed);
  } catch (const std::exception& ex) {
    fs::create_directories(job.dir);
    std::ofstream(job.dir / "error.txt") << ex.what() << '\n';
    std::fprintf(stderr, "%s: %s\n", job.dir.string().c_str(), ex.what());
    return 1;
  }
  save_run(job.dir, r);
  if (!r.metrics.error.empty()) {
    std::fprintf(stderr, "%s: run aborted: %s\n", job.dir.string().c_str(), r.metrics.error.c_str());
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s  seed %llu  final-100 return %.3f  (%.1f s)\n", job.dir.string().c_str(),
              static_cast<unsigned long long>(job.seed), mean_of_last(r.metrics.episode_rewards, 100), secs);
  std::fflush(stdout);
  return 0;
}

/// Runs jobs in forked worker processes, at most `jobs` at a time.
int run_parallel(const std::vector<Job>& work, int jobs) {
  if (jobs <= 1 || work.size() <= 1) {
    int failed = 0;
    for (const auto& j : work) failed += run_one(j) != 0;
    return failed;
  }
  std::fflush(stdout);
  std::size_t next = 0;
  int running = 0, failed = 0;
  while (next < work.size() || running > 0) {
    while (running < jobs && next < work.size()) {
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) _exit(run_one(work[next]));
      ++running;
      ++next;
    }
    int status = 0;
    if (wait(&status) > 0) {
      --running;
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++failed;
    }
  }
  return failed;
}

std::vector<fs::path> find_metrics(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(p)) return {p};
  if (!fs::is_directory(p)) throw std::runtime_error("no such file or directory: " + p.string());
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file() && e.path().filename() == "metrics.csv") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no metrics.csv under " + p.string());
  return out;
}

std::string curve_label(const fs::path& p) {
  if (fs::is_directory(p)) return fs::absolute(p).lexically_normal().filename().empty()
                                      ? fs::absolute(p).lexically_normal().parent_path().filename().string()
                                      : fs::absolute(p).lexically_normal().filename().string();
  if (p.stem() == "metrics") return fs::absolute(p).parent_path().filename().string();
  return p.stem().string();
}

Curve load_curve(const fs::path& input) {
  Curve c{curve_label(input), {}};
  for (const auto& f : find_metrics(input)) c.runs.push_back(episode_returns(load_metrics(f.string())));
  return c;
}

int write_preset_report(const ExperimentPreset& preset, const fs::path& out) {
  std::map<std::string, std::vector<Curve>> charts;
  std::ofstream summary(out / "summary.csv", std::ios::binary);
  summary << "chart,label,seed,final_return\n";
  for (const auto& cell : preset.cells) {
    Curve curve{cell.label, {}};
    for (auto seed : preset.seeds) {
      const fs::path m = out / cell.chart / cell.label / ("seed_" + std::to_string(seed)) / "metrics.csv";
      if (!fs::exists(m)) continue;
      const auto returns = episode_returns(load_metrics(m.string()));
      summary << cell.chart << ',' << cell.label << ',' << seed << ',' << format_double(mean_of_last(returns, 100))
              << '\n';
      curve.runs.push_back(returns);
    }
    charts[cell.chart].push_back(std::move(curve));
  }
  for (const auto& [chart, curves] : charts) save_svg((out / (chart + ".svg")).string(), curves, preset.name + ": " + chart);
  std::printf("wrote %s and %zu chart(s)\n", (out / "summary.csv").string().c_str(), charts.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forger: forgetful imitation and hierarchical forging on desk-scale environments"};
  app.require_subcommand(1);

  // gen-demos
  auto* gen = app.add_subcommand("gen-demos", "record scripted-expert demonstrations");
  std::string gen_env = "lineworld", gen_out, gen_config;
  double gen_noise = 0.0;
  int gen_episodes = 50, gen_chain = 5, gen_bins = 7;
  std::uint64_t gen_seed = 0;
  gen->add_option("--env", gen_env, "lineworld | craftworld");
  gen->add_option("--config", gen_config, "take env and expert settings from an experiment config");
  gen->add_option("--chain-length", gen_chain, "craftworld recipe chain length (1-7)");
  gen->add_option("--action-bins", gen_bins, "lineworld action bins for the recorded labels");
  gen->add_option("--expert-noise", gen_noise, "probability of a uniformly random action");
  gen->add_option("--episodes", gen_episodes, "number of episodes");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output demo file (JSONL)")->required();

  // extract-chain
  auto* ext = app.add_subcommand("extract-chain", "build the subtask graph and chain from demonstrations");
  std::string ext_demos, ext_out;
  ext->add_option("demos,--demos", ext_demos, "demo file")->required();
  ext->add_option("--out", ext_out, "output chain file")->required();

  // train
  auto* train = app.add_subcommand("train", "imitate and forge; one output directory per seed");
  std::string train_config, train_out, train_seeds, train_preset;
  std::uint64_t train_seed = 0;
  int train_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  Overrides ov;
  train->add_option("--config", train_config, "experiment config (JSON)");
  train->add_option("--preset", train_preset, "run a named experiment grid instead of one config")
      ->check(CLI::IsMember(preset_names()));
  auto* seed_opt = train->add_option("--seed", train_seed, "single seed; writes directly into --out");
  train->add_option("--seeds", train_seeds, "seed list, e.g. 1,2,3 or 0-9; writes --out/seed_<s>")->excludes(seed_opt);
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--jobs", train_jobs, "parallel worker processes");
  train->add_option("--env", ov.env, "override env type (lineworld | craftworld)");
  train->add_option("--expert-noise", ov.expert_noise, "override demo corruption probability");
  train->add_option("--schedule", ov.schedule, "override forgetting schedule: linear | constant | full_forget");
  train->add_option("--d", ov.d, "override linear schedule length d");
  train->add_option("--demo-ratio", ov.demo_ratio, "constant demo ratio rho (implies --schedule constant)");
  train->add_option("--episodes", ov.episodes, "override forging episodes");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "greedy rollouts of saved checkpoints");
  std::string eval_run, eval_out;
  int eval_episodes = -1;
  std::uint64_t eval_seed_pool = 0;
  eval->add_option("run,--run", eval_run, "directory written by train")->required();
  eval->add_option("--episodes", eval_episodes, "episodes (default: config evaluation.episodes)");
  eval->add_option("--seed", eval_seed_pool, "seed pool shared across runs");
  eval->add_option("--out", eval_out, "per-episode CSV (default: <run>/evaluation.csv)");

  // plot
  auto* plot = app.add_subcommand("plot", "SVG learning curves from metrics files");
  std::vector<std::string> plot_inputs;
  std::string plot_out, plot_title = "episode return";
  plot->add_option("inputs", plot_inputs, "metrics.csv files or directories (one curve each)")->required();
  plot->add_option("--out", plot_out, "output SVG")->required();
  plot->add_option("--title", plot_title, "chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      EnvConfig env = env_from_name(gen_env, gen_chain, gen_bins);
      ExpertConfig ec{gen_noise};
      if (!gen_config.empty()) {
        const auto c = load_experiment(gen_config);
        env = c.env;
        ec = c.expert;
      }
      ec.validate();
      const auto demos = generate_demos(env, ec, gen_episodes, gen_seed);
      if (!gen_out.empty() && fs::path(gen_out).has_parent_path()) fs::create_directories(fs::path(gen_out).parent_path());
      save_demos(gen_out, demos, DemoHeader{env_name(env), gen_episodes, gen_seed, ec.corruption_prob});
      double total = 0.0;
      for (const auto& ep : demos) total += ep.total_reward();
      std::printf("%d episodes on %s, mean return %.4f -> %s\n", gen_episodes, env_name(env).c_str(),
                  demos.empty() ? 0.0 : total / static_cast<double>(demos.size()), gen_out.c_str());
      return 0;
    }

    if (*ext) {
      const auto file = load_demos(ext_demos);
      if (file.episodes.empty()) throw ContractError("extract-chain: demo file has no episodes");
      const auto ex = extract_chain(file.episodes);
      save_chain(ext_out, ex.chain, &ex.graph);
      std::printf("%s\n", ex.chain.summary().c_str());
      if (ex.chain.back_edges > 0)
        std::printf("dropped %d back edge(s), total weight %d; %d trajectory order violation(s)\n", ex.chain.back_edges,
                    ex.chain.back_edge_weight, ex.chain.violations);
      return 0;
    }

    if (*train) {
      const fs::path out(train_out);
      std::vector<Job> work;
      if (!train_preset.empty()) {
        const auto preset = make_preset(train_preset);
        const auto seeds = train_seeds.empty() ? preset.seeds : parse_seeds(train_seeds);
        for (const auto& cell : preset.cells) {
          auto c = cell.config;
          apply(ov, c);
          for (auto s : seeds)
            work.push_back({c, s, out / cell.chart / cell.label / ("seed_" + std::to_string(s))});
        }
        const int failed = run_parallel(work, train_jobs);
        write_preset_report(preset, out);
        return failed ? 1 : 0;
      }
      ExperimentConfig cfg;
      if (!train_config.empty()) cfg = load_experiment(train_config);
      apply(ov, cfg);
      if (!train_seeds.empty()) {
        for (auto s : parse_seeds(train_seeds)) work.push_back({cfg, s, out / ("seed_" + std::to_string(s))});
      } else {
        work.push_back({cfg, train_seed, out});
      }
      return run_parallel(work, train_jobs) ? 1 : 0;
    }

    if (*eval) {
      const auto run = load_run(eval_run);
      const int n = eval_episodes >= 0 ? eval_episodes : run.config.eval_episodes;
      const auto s = evaluate_policies(run.config.env, run.chain, run.policies, n, eval_seed_pool);
      const std::string path = eval_out.empty() ? (fs::path(eval_run) / "evaluation.csv").string() : eval_out;
      std::ofstream os(path, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + path);
      write_evaluation(os, run.chain, s);
      std::printf("%d episodes, mean reward %.4f, all subgoals completed in %d\n", n, s.mean_reward, s.all_completed);
      for (std::size_t g = 0; g < run.chain.size(); ++g)
        std::printf("  %-16s %d\n", run.chain.subgoals[g].name.c_str(), s.completion_counts[g]);
      return 0;
    }

    if (*plot) {
      std::vector<Curve> curves;
      for (const auto& in : plot_inputs) curves.push_back(load_curve(in));
      save_svg(plot_out, curves, plot_title);
      std::printf("%zu curve(s) -> %s\n", curves.size(), plot_out.c_str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
