#ifndef FORGER_AGENT_AGENT_HPP_
#define FORGER_AGENT_AGENT_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "forger/approx/loss.hpp"
#include "forger/approx/optimizer.hpp"
#include "forger/approx/qfunction.hpp"
#include "forger/envs/environment.hpp"
#include "forger/hierarchy/split.hpp"
#include "forger/hierarchy/subtasks.hpp"
#include "forger/replay/forgetting.hpp"
#include "forger/replay/structured_buffer.hpp"

namespace forger {

/// splitmix64; derives independent stream seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct AgentConfig {
  int imitation_steps = 20000;  // per subgoal
  ForgettingSchedule schedule = ForgettingSchedule::linear(50);
  double eps_initial = 0.1;
  double eps_final = 0.01;
  double eps_decay = 0.99;
  bool eps_decay_per_step = false;
  int target_period = 2000;
  LossWeights loss;
  double extra_fraction = 0.25;
  int batch_size = 32;
  int episodes = 300;
  std::vector<int> hidden{64, 64};
  AdamConfig adam;
  ReplayConfig replay;
  RewardMode reward_mode = RewardMode::replace;
  /// multiplies every training reward (demo and agent); metrics stay unscaled
  double reward_scale = 1.0;
  /// agent transitions a subgoal must hold before forging updates start
  int learning_starts = 32;
  std::uint64_t seed = 0;

  void validate() const {
    schedule.validate();
    loss.validate();
    if (imitation_steps < 0) throw ContractError("agent: imitation_steps must be >= 0");
    if (eps_final > eps_initial) throw ContractError("agent: eps_final > eps_initial");
    if (eps_initial < 0 || eps_initial > 1 || eps_final < 0) throw ContractError("agent: epsilon outside [0,1]");
    if (eps_decay <= 0 || eps_decay > 1) throw ContractError("agent: eps_decay outside (0,1]");
    if (extra_fraction < 0.0 || extra_fraction >= 1.0) throw ContractError("agent: extra_fraction outside [0,1)");
    if (batch_size < 1) throw ContractError("agent: batch_size must be >= 1");
    if (episodes < 0) throw ContractError("agent: episodes must be >= 0");
    if (target_period < 1) throw ContractError("agent: target_period must be >= 1");
    if (learning_starts < batch_size) throw ContractError("agent: learning_starts must be >= batch_size");
    if (reward_scale <= 0) throw ContractError("agent: reward_scale must be positive");
    for (int h : hidden)
      if (h <= 0) throw ContractError("agent: hidden sizes must be positive");
  }
};

/// max(eps_final, eps_initial * decay^k)
inline double epsilon_at(const AgentConfig& cfg, std::int64_t k) {
  return std::max(cfg.eps_final, cfg.eps_initial * std::pow(cfg.eps_decay, static_cast<double>(k)));
}

/// One forging call (one subgoal inside one environment episode).
struct MetricsRow {
  int episode = 0;
  std::string subgoal;
  double env_reward = 0.0;
  double pseudo_reward = 0.0;
  double td_loss = 0.0;
  double demo_fraction = 0.0;
  double epsilon = 0.0;
  int steps = 0;
  bool solved = false;
  double wall_seconds = 0.0;  // not persisted
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  std::vector<double> episode_rewards;  // total env reward per environment episode
  std::string error;                    // diagnostic when the run aborted
};

/// Observer hook for batch composition, used by tests and diagnostics.
struct BatchEvent {
  enum class Phase { imitation, forging } phase;
  std::string subgoal;
  int k = 0;  // forging episode of this subgoal (0 during imitation)
  int n_demo = 0;
  int n_agent = 0;
  int n_extra = 0;
  int margin_on_agent = 0;  // agent-source samples with a non-zero margin mask
};

/// Hierarchical ForgER agent: per-subgoal Q-networks trained by imitation
/// on their demo partition, then forged online with a demo ratio set by the
/// forgetting schedule.
class ForgerAgent {
 public:
  ForgerAgent(EnvConfig env, SubtaskChain chain, AgentConfig cfg)
      : env_(std::move(env)), chain_(std::move(chain)), cfg_(std::move(cfg)), buffer_(cfg_.replay),
        sample_rng_(mix_seed(cfg_.seed, 1)), explore_rng_(mix_seed(cfg_.seed, 2)) {
    cfg_.validate();
    if (chain_.empty()) throw ContractError("agent: empty chain");
    std::vector<int> sizes{env_obs_dim(env_)};
    sizes.insert(sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    sizes.push_back(env_num_actions(env_));
    // Every option starts from the same initial parameters.
    const FeedForwardQ init(sizes, mix_seed(cfg_.seed, 3));
    for (const auto& g : chain_.subgoals) {
      buffer_.add_subgoal(g.name);
      Option opt;
      opt.nets = TargetPair<FeedForwardQ>(init, cfg_.target_period);
      opt.optimizer = Adam(init, cfg_.adam);
      options_.push_back(std::move(opt));
    }
  }

  const SubtaskChain& chain() const { return chain_; }
  const AgentConfig& config() const { return cfg_; }
  const StructuredReplayBuffer& buffer() const { return buffer_; }
  const FeedForwardQ& policy(std::size_t i) const { return options_.at(i).nets.online(); }
  const FeedForwardQ& target(std::size_t i) const { return options_.at(i).nets.target(); }
  int forging_episodes(std::size_t i) const { return options_.at(i).k; }

  void set_batch_observer(std::function<void(const BatchEvent&)> fn) { observer_ = std::move(fn); }

  /// Splits demonstrations by subgoal and fills demo/extra partitions.
  SplitResult load_demos(const std::vector<Episode>& demos) {
    auto split = split_demos(demos, chain_, cfg_.loss.n, cfg_.loss.gamma, cfg_.reward_mode);
    for (auto& [name, data] : split.per_subgoal) {
      for (auto t : data.demo) {
        scale(t);
        buffer_.insert(std::move(t));
      }
      for (auto t : data.extra) {
        scale(t);
        buffer_.insert_extra(name, std::move(t));
      }
    }
    return split;
  }

  /// Offline training of option i for `steps` gradient steps on demo and
  /// augmentation data. Returns the mean loss.
  double imitate(std::size_t i, int steps) {
    const auto& g = chain_.subgoals.at(i);
    if (buffer_.size(g.name, Pool::demo) == 0) throw ContractError("imitate: empty demo pool for " + g.name);
    Option& opt = options_[i];
    const int n_extra_target = buffer_.size(g.name, Pool::extra) == 0 ? 0 : demo_count(cfg_.extra_fraction, cfg_.batch_size);
    const int n_demo = cfg_.batch_size - n_extra_target;
    double total = 0.0;
    for (int s = 0; s < steps; ++s) {
      Batch batch = buffer_.sample_pools(g.name, {{Pool::demo, n_demo}, {Pool::extra, n_extra_target}},
                                         cfg_.replay.beta0, sample_rng_);
      notify(BatchEvent::Phase::imitation, g.name, 0, batch);
      total += train_on(opt, batch).loss;
    }
    return steps > 0 ? total / steps : 0.0;
  }

  void imitate_all() {
    for (std::size_t i = 0; i < options_.size(); ++i) imitate(i, cfg_.imitation_steps);
  }

  /// Runs option i inside `env` until its subgoal is met, the environment
  /// episode ends, or max_steps elapse. `episode` is the global episode index.
  MetricsRow forge(std::size_t i, Env& env, int episode) {
    const auto start = std::chrono::steady_clock::now();
    const auto& g = chain_.subgoals.at(i);
    Option& opt = options_[i];
    const int k = opt.k;
    MetricsRow row;
    row.episode = episode;
    row.subgoal = g.name;
    row.demo_fraction = forgetting_rate(cfg_.schedule, k);
    const double beta = cfg_.episodes > 0
                            ? cfg_.replay.beta0 + (1.0 - cfg_.replay.beta0) *
                                                      std::min(1.0, static_cast<double>(episode) / cfg_.episodes)
                            : 1.0;

    NStepAccumulator window(cfg_.loss.n, cfg_.loss.gamma);
    std::vector<Transition> ready;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> random_action(0, env.num_actions() - 1);
    int updates = 0;
    double td_sum = 0.0;
    const int cap = max_steps(env);

    while (!env.done() && row.steps < cap) {
      const double eps = cfg_.eps_decay_per_step ? epsilon_at(cfg_, opt.steps) : epsilon_at(cfg_, k);
      row.epsilon = eps;
      Observation obs = env.observe();
      Action a;
      if (unit(explore_rng_) < eps) {
        a.index = random_action(explore_rng_);
      } else {
        const auto q = opt.nets.online().q_values(obs);
        a.index = argmax_lowest(Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size())));
      }
      StepResult res = env.step(a);
      ++row.steps;
      ++opt.steps;
      row.env_reward += res.reward;
      const double pr = pseudo_reward(res.inventory_delta, g);
      row.pseudo_reward += pr;
      const bool met = subgoal_met(g, env.acquired());
      double r = res.reward;
      if (!g.required_item.empty()) r = cfg_.reward_mode == RewardMode::replace ? pr : pr + res.reward;

      Transition t;
      t.obs = std::move(obs);
      t.action = a;
      t.reward = r * cfg_.reward_scale;
      t.next_obs = std::move(res.obs);
      t.done = res.done || met;
      t.subgoal = g.name;
      t.margin_mask = 0;
      t.source = Source::agent;
      window.push(std::move(t), ready);
      if (met || res.done || row.steps >= cap) window.flush(ready);
      for (auto& tr : ready) buffer_.insert(std::move(tr));
      ready.clear();

      if (buffer_.size(g.name, Pool::agent) >= static_cast<std::size_t>(cfg_.learning_starts)) {
        Batch batch = buffer_.sample_batch(g.name, cfg_.batch_size, row.demo_fraction, beta, sample_rng_);
        notify(BatchEvent::Phase::forging, g.name, k, batch);
        td_sum += train_on(opt, batch).td1;
        ++updates;
      }
      if (met) {
        row.solved = true;
        break;
      }
    }
    row.td_loss = updates ? td_sum / updates : 0.0;
    ++opt.k;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  }

  /// Forging loop over environment episodes after imitation. The
  /// controller picks the first unmet subgoal; a solved subgoal hands over
  /// to the next one within the same episode.
  RunMetrics forge_episodes(int episodes, int first_episode = 0) {
    RunMetrics m;
    for (int e = first_episode; e < first_episode + episodes; ++e) {
      Env env = env_reset(env_, mix_seed(cfg_.seed, 1000 + static_cast<std::uint64_t>(e)));
      double total = 0.0;
      while (!env.done()) {
        const int i = forger::advance(chain_, env.acquired());
        MetricsRow row = forge(static_cast<std::size_t>(i), env, e);
        total += row.env_reward;
        const bool handover = row.solved && i + 1 < static_cast<int>(chain_.size());
        m.rows.push_back(std::move(row));
        if (!handover) break;
      }
      m.episode_rewards.push_back(total);
    }
    return m;
  }

  /// Imitate every option, then forge for the configured number of episodes.
  RunMetrics run() {
    RunMetrics m;
    try {
      imitate_all();
      m = forge_episodes(cfg_.episodes);
    } catch (const std::exception& ex) {
      m.error = ex.what();
    }
    return m;
  }

 private:
  struct Option {
    TargetPair<FeedForwardQ> nets;
    Adam optimizer;
    int k = 0;               // forging episodes so far
    std::int64_t steps = 0;  // environment steps so far
  };

  static int max_steps(const Env& env) {
    if (auto* c = std::get_if<CraftWorldConfig>(&env.config())) return c->max_steps;
    return std::get<LineWorldConfig>(env.config()).max_steps;
  }

  void scale(Transition& t) const {
    t.reward *= cfg_.reward_scale;
    t.n_return *= cfg_.reward_scale;
  }

  LossResult train_on(Option& opt, const Batch& batch) {
    std::vector<const Transition*> ts;
    std::vector<double> ws;
    ts.reserve(batch.size());
    ws.reserve(batch.size());
    for (const auto& s : batch) {
      ts.push_back(s.transition);
      ws.push_back(s.weight);
    }
    auto grad = opt.nets.online().zero_grad();
    LossResult res = composite_loss_and_grads<FeedForwardQ>(ts, ws, opt.nets.online(), opt.nets.target(), cfg_.loss, grad);
    opt.optimizer.apply(opt.nets.online(), grad);
    if (!opt.nets.online().finite()) throw NumericError("parameters became non-finite");
    buffer_.update_priorities(batch, res.abs_td);
    opt.nets.tick();
    return res;
  }

  void notify(BatchEvent::Phase phase, const std::string& g, int k, const Batch& batch) const {
    if (!observer_) return;
    BatchEvent ev{phase, g, k, 0, 0, 0, 0};
    for (const auto& s : batch) {
      switch (s.id.pool) {
        case Pool::demo: ++ev.n_demo; break;
        case Pool::agent:
          ++ev.n_agent;
          if (s.transition->margin_mask != 0) ++ev.margin_on_agent;
          break;
        case Pool::extra: ++ev.n_extra; break;
      }
    }
    observer_(ev);
  }

  EnvConfig env_;
  SubtaskChain chain_;
  AgentConfig cfg_;
  StructuredReplayBuffer buffer_;
  std::vector<Option> options_;
  std::mt19937_64 sample_rng_;
  std::mt19937_64 explore_rng_;
  std::function<void(const BatchEvent&)> observer_;
};

/// Greedy (epsilon = 0) rollouts of a trained chain.
struct EvaluationEpisode {
  double env_reward = 0.0;
  std::vector<bool> completed;  // per subgoal
  int steps = 0;
};

template <class PolicyAt>
EvaluationEpisode evaluate_episode(const EnvConfig& env_cfg, const SubtaskChain& chain, PolicyAt&& policy_at,
                                   std::uint64_t seed) {
  Env env = env_reset(env_cfg, seed);
  EvaluationEpisode out;
  while (!env.done()) {
    const int i = forger::advance(chain, env.acquired());
    const auto q = policy_at(static_cast<std::size_t>(i)).q_values(env.observe());
    const Action a{argmax_lowest(Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size())))};
    out.env_reward += env.step(a).reward;
    ++out.steps;
  }
  const auto acquired = env.acquired();
  for (const auto& g : chain.subgoals) {
    if (g.required_item.empty()) {
      const auto* lw = std::get_if<LineWorldState>(&env.state());
      out.completed.push_back(lw ? lw->success : true);
    } else {
      out.completed.push_back(subgoal_met(g, acquired));
    }
  }
  return out;
}

}  // namespace forger

#endif  // FORGER_AGENT_AGENT_HPP_
