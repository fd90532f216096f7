#ifndef FORGER_CORE_HPP_
#define FORGER_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace forger {

/// Raised when a caller breaks an operation's precondition (bad config,
/// stepping a finished episode, unknown ids, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when training produces NaN/inf values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Observation = std::vector<double>;

/// item name -> count
using Inventory = std::map<std::string, int>;

struct Action {
  int index = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

enum class Source : std::uint8_t { demo, agent };

inline const char* to_string(Source s) { return s == Source::demo ? "demo" : "agent"; }

/// One node of a subtask chain. An empty required_item marks a task whose
/// only termination is the end of the environment episode (flat ForgER).
struct SubgoalId {
  std::string name;
  std::string required_item;
  int required_quantity = 1;

  friend bool operator==(const SubgoalId&, const SubgoalId&) = default;
  friend auto operator<=>(const SubgoalId& a, const SubgoalId& b) { return a.name <=> b.name; }
};

struct Transition {
  Observation obs;
  Action action;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  double n_return = 0.0;
  Observation n_obs;
  int n_eff = 1;
  /// true when the n-step window ended on a terminal step (no bootstrap)
  bool n_done = false;
  std::string subgoal;
  int margin_mask = 0;
  Source source = Source::agent;
};

struct EpisodeStep {
  Observation obs;
  Action action;
  double reward = 0.0;
  Inventory inventory;  // snapshot after the step
  bool done = false;
  /// continuous action emitted before discretization, when there was one
  std::optional<double> raw_action;
};

/// A recorded trajectory. steps[t].obs is the observation the action was
/// taken from; final_obs is the observation after the last step.
struct Episode {
  std::vector<EpisodeStep> steps;
  Observation final_obs;
  std::string env_name;
  std::uint64_t seed = 0;

  std::size_t size() const { return steps.size(); }

  const Observation& observation_at(std::size_t t) const {
    return t < steps.size() ? steps[t].obs : final_obs;
  }

  double total_reward() const {
    double sum = 0.0;
    for (const auto& s : steps) sum += s.reward;
    return sum;
  }
};

struct NStepResult {
  double n_return = 0.0;
  Observation n_obs;
  int n_eff = 1;
  bool n_done = false;
};

/// Discounted n-step return starting at step t of a recorded episode.
/// The window is truncated at the episode end.
inline NStepResult compute_nstep(const Episode& episode, std::size_t t, int n, double gamma) {
  if (t >= episode.size()) throw ContractError("compute_nstep: t out of range");
  if (n < 1) throw ContractError("compute_nstep: n must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw ContractError("compute_nstep: gamma outside [0,1]");

  NStepResult out;
  const std::size_t remaining = episode.size() - t;
  out.n_eff = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), remaining));
  double discount = 1.0;
  for (int i = 0; i < out.n_eff; ++i) {
    const auto& step = episode.steps[t + static_cast<std::size_t>(i)];
    out.n_return += discount * step.reward;
    discount *= gamma;
    if (step.done) {
      out.n_eff = i + 1;
      out.n_done = true;
      break;
    }
  }
  out.n_obs = episode.observation_at(t + static_cast<std::size_t>(out.n_eff));
  return out;
}

/// Sliding n-step window over a live episode. Transitions come out once
/// their window is complete, or early when the episode (or option) ends.
class NStepAccumulator {
 public:
  NStepAccumulator(int n, double gamma) : n_(n), gamma_(gamma) {
    if (n < 1) throw ContractError("NStepAccumulator: n must be >= 1");
  }

  void push(Transition t, std::vector<Transition>& out) {
    const bool done = t.done;
    pending_.push_back(std::move(t));
    if (done) {
      drain(true, out);
    } else if (static_cast<int>(pending_.size()) == n_) {
      emit_front(false, out);
    }
  }

  /// Window cut without a terminal (time limit, segment end): bootstrap stays on.
  void flush(std::vector<Transition>& out) { drain(false, out); }

  std::size_t pending() const { return pending_.size(); }

 private:
  void emit_front(bool terminal, std::vector<Transition>& out) {
    Transition t = std::move(pending_.front());
    double ret = 0.0, discount = 1.0;
    ret += t.reward;
    discount *= gamma_;
    for (std::size_t i = 1; i < pending_.size(); ++i) {
      ret += discount * pending_[i].reward;
      discount *= gamma_;
    }
    t.n_return = ret;
    t.n_eff = static_cast<int>(pending_.size());
    t.n_obs = pending_.size() > 1 ? pending_.back().next_obs : t.next_obs;
    t.n_done = terminal;
    pending_.erase(pending_.begin());
    out.push_back(std::move(t));
  }

  void drain(bool terminal, std::vector<Transition>& out) {
    while (!pending_.empty()) emit_front(terminal, out);
  }

  int n_;
  double gamma_;
  std::vector<Transition> pending_;
};

/// Positive inventory changes between two snapshots.
inline Inventory inventory_gains(const Inventory& before, const Inventory& after) {
  Inventory gains;
  for (const auto& [item, count] : after) {
    auto it = before.find(item);
    const int prev = it == before.end() ? 0 : it->second;
    if (count > prev) gains[item] = count - prev;
  }
  return gains;
}

inline int count_of(const Inventory& inv, const std::string& item) {
  auto it = inv.find(item);
  return it == inv.end() ? 0 : it->second;
}

inline bool all_finite(const Observation& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace forger

#endif  // FORGER_CORE_HPP_
