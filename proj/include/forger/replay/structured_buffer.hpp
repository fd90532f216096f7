#ifndef FORGER_REPLAY_STRUCTURED_BUFFER_HPP_
#define FORGER_REPLAY_STRUCTURED_BUFFER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "forger/core.hpp"
#include "forger/replay/forgetting.hpp"
#include "forger/replay/sum_tree.hpp"

namespace forger {

/// Prioritization constants.
struct ReplayConfig {
  double alpha = 0.4;
  double eps_agent = 1e-4;
  double eps_demo = 1.0;
  double beta0 = 0.6;
  std::size_t agent_capacity = 100000;
  /// |delta| assumed for the first insert into an empty partition
  double initial_abs_td = 1.0;
};

/// Partition kind inside one subgoal. `extra` holds augmentation data
/// borrowed from other subgoals (demo-derived, margin and reward disabled).
enum class Pool : std::uint8_t { demo = 0, agent = 1, extra = 2 };

inline const char* to_string(Pool p) {
  switch (p) {
    case Pool::demo: return "demo";
    case Pool::agent: return "agent";
    case Pool::extra: return "extra";
  }
  return "?";
}

/// Proportional priority store. capacity 0 means unbounded; otherwise the
/// oldest element is overwritten once full.
class PriorityStore {
 public:
  PriorityStore(std::size_t capacity, double eps, double alpha, double initial_abs_td)
      : capacity_(capacity), eps_(eps), alpha_(alpha), max_raw_(initial_abs_td + eps),
        tree_(capacity == 0 ? 64 : capacity) {}

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  double total_mass() const { return tree_.total(); }
  double mass(std::size_t slot) const { return tree_.get(slot); }
  double eps() const { return eps_; }
  const Transition& at(std::size_t slot) const { return items_.at(slot); }
  std::uint64_t serial(std::size_t slot) const { return serials_.at(slot); }

  /// Stores t with the current maximum priority; returns the slot.
  std::size_t insert(Transition t) {
    std::size_t slot;
    if (capacity_ != 0 && items_.size() == capacity_) {
      slot = cursor_;
      cursor_ = (cursor_ + 1) % capacity_;
      items_[slot] = std::move(t);
      serials_[slot] = next_serial_++;
    } else {
      slot = items_.size();
      if (slot >= tree_.capacity()) tree_.grow(tree_.capacity() * 2);
      items_.push_back(std::move(t));
      serials_.push_back(next_serial_++);
    }
    tree_.set(slot, std::pow(max_raw_, alpha_));
    return slot;
  }

  /// p <- (|delta| + eps)^alpha
  void update(std::size_t slot, double abs_td) {
    const double raw = std::abs(abs_td) + eps_;
    if (!std::isfinite(raw)) throw NumericError("priority update with non-finite TD error");
    max_raw_ = std::max(max_raw_, raw);
    tree_.set(slot, std::pow(raw, alpha_));
  }

  template <class Rng>
  std::size_t draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, tree_.total());
    return tree_.find(u(rng));
  }

  /// Leaf-sum recomputation, for consistency checks.
  double leaf_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < items_.size(); ++i) s += tree_.get(i);
    return s;
  }

 private:
  std::size_t capacity_;
  double eps_;
  double alpha_;
  double max_raw_;
  SumTree tree_;
  std::vector<Transition> items_;
  std::vector<std::uint64_t> serials_;
  std::size_t cursor_ = 0;
  std::uint64_t next_serial_ = 0;
};

struct SampleId {
  std::string subgoal;
  Pool pool = Pool::demo;
  std::size_t slot = 0;
  std::uint64_t serial = 0;
};

struct Sample {
  /// Points into the buffer; valid until the next insert.
  const Transition* transition = nullptr;
  double weight = 1.0;
  SampleId id;
};

using Batch = std::vector<Sample>;

/// Replay partitioned by (subgoal, pool). Demo and extra partitions are
/// never evicted; agent partitions are FIFO-bounded.
class StructuredReplayBuffer {
 public:
  explicit StructuredReplayBuffer(ReplayConfig cfg = {}) : cfg_(cfg) {}

  const ReplayConfig& config() const { return cfg_; }

  void add_subgoal(const std::string& g) {
    if (stores_.count({g, Pool::demo})) return;
    stores_.emplace(Key{g, Pool::demo}, PriorityStore(0, cfg_.eps_demo, cfg_.alpha, cfg_.initial_abs_td));
    stores_.emplace(Key{g, Pool::extra}, PriorityStore(0, cfg_.eps_demo, cfg_.alpha, cfg_.initial_abs_td));
    stores_.emplace(Key{g, Pool::agent},
                    PriorityStore(cfg_.agent_capacity, cfg_.eps_agent, cfg_.alpha, cfg_.initial_abs_td));
  }

  bool has_subgoal(const std::string& g) const { return stores_.count({g, Pool::demo}) != 0; }

  /// Routes by t.subgoal and t.source.
  void insert(Transition t) {
    const Pool pool = t.source == Source::demo ? Pool::demo : Pool::agent;
    store(t.subgoal, pool).insert(std::move(t));
  }

  /// Augmentation data for subgoal g.
  void insert_extra(const std::string& g, Transition t) {
    t.margin_mask = 0;
    store(g, Pool::extra).insert(std::move(t));
  }

  std::size_t size(const std::string& g, Pool p) const { return store(g, p).size(); }
  const PriorityStore& partition(const std::string& g, Pool p) const { return store(g, p); }

  /// Forging batch: round(rho*B) from demo, the rest from agent. An agent
  /// partition holding fewer than its share is topped up from demo.
  template <class Rng>
  Batch sample_batch(const std::string& g, int batch_size, double rho, double beta, Rng& rng) const {
    if (batch_size < 1) throw ContractError("sample_batch: batch size must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw ContractError("sample_batch: rho outside [0,1]");
    const auto& demo = store(g, Pool::demo);
    const auto& agent = store(g, Pool::agent);
    if (demo.empty() && agent.empty()) throw ContractError("sample_batch: both partitions empty");
    int n_demo = demo_count(rho, batch_size);
    int n_agent = batch_size - n_demo;
    if (agent.size() < static_cast<std::size_t>(n_agent)) {
      n_agent = static_cast<int>(agent.size());
      n_demo = batch_size - n_agent;
    }
    if (demo.empty()) {
      n_agent = batch_size;
      n_demo = 0;
    }
    return sample_pools(g, {{Pool::demo, n_demo}, {Pool::agent, n_agent}}, beta, rng);
  }

  /// Draws counts[p] elements from each listed pool of subgoal g.
  template <class Rng>
  Batch sample_pools(const std::string& g, const std::vector<std::pair<Pool, int>>& counts, double beta,
                     Rng& rng) const {
    Batch batch;
    double max_w = 0.0;
    for (const auto& [pool, n] : counts) {
      if (n <= 0) continue;
      const auto& part = store(g, pool);
      if (part.empty()) throw ContractError("sample_pools: empty partition requested");
      const double total = part.total_mass();
      const double count = static_cast<double>(part.size());
      for (int i = 0; i < n; ++i) {
        Sample s;
        s.id.subgoal = g;
        s.id.pool = pool;
        s.id.slot = part.draw(rng);
        s.id.serial = part.serial(s.id.slot);
        s.transition = &part.at(s.id.slot);
        const double p = part.mass(s.id.slot) / total;
        s.weight = std::pow(count * p, -beta);
        max_w = std::max(max_w, s.weight);
        batch.push_back(s);
      }
    }
    for (auto& s : batch) s.weight /= max_w;
    return batch;
  }

  void update_priorities(const std::vector<SampleId>& ids, const std::vector<double>& td_errors) {
    if (ids.size() != td_errors.size()) throw ContractError("update_priorities: size mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto& part = store(ids[i].subgoal, ids[i].pool);
      if (ids[i].slot >= part.size() || part.serial(ids[i].slot) != ids[i].serial)
        throw ContractError("update_priorities: stale or unknown sample id");
      part.update(ids[i].slot, td_errors[i]);
    }
  }

  void update_priorities(const Batch& batch, const std::vector<double>& td_errors) {
    std::vector<SampleId> ids;
    ids.reserve(batch.size());
    for (const auto& s : batch) ids.push_back(s.id);
    update_priorities(ids, td_errors);
  }

  /// Debug dump, one JSON object per stored transition. Not a stable format.
  void write_snapshot(std::ostream& os) const {
    for (const auto& [key, part] : stores_) {
      for (std::size_t i = 0; i < part.size(); ++i) {
        const auto& t = part.at(i);
        nlohmann::json j{{"subgoal", key.first},     {"pool", to_string(key.second)},
                         {"slot", i},                {"mass", part.mass(i)},
                         {"obs", t.obs},             {"action", t.action.index},
                         {"reward", t.reward},       {"done", t.done},
                         {"n_return", t.n_return},   {"n_eff", t.n_eff},
                         {"margin_mask", t.margin_mask}};
        os << j.dump() << '\n';
      }
    }
  }

 private:
  using Key = std::pair<std::string, Pool>;

  PriorityStore& store(const std::string& g, Pool p) {
    auto it = stores_.find({g, p});
    if (it == stores_.end()) throw ContractError("replay: unknown subgoal " + g);
    return it->second;
  }
  const PriorityStore& store(const std::string& g, Pool p) const {
    auto it = stores_.find({g, p});
    if (it == stores_.end()) throw ContractError("replay: unknown subgoal " + g);
    return it->second;
  }

  ReplayConfig cfg_;
  std::map<Key, PriorityStore> stores_;
};

}  // namespace forger

#endif  // FORGER_REPLAY_STRUCTURED_BUFFER_HPP_
