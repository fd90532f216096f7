#ifndef FORGER_REPLAY_SUM_TREE_HPP_
#define FORGER_REPLAY_SUM_TREE_HPP_

#include <cstddef>
#include <vector>

#include "forger/core.hpp"

namespace forger {

/// Binary prefix-sum tree over non-negative leaf masses.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 1) { reset(capacity); }

  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_[1]; }
  double get(std::size_t i) const { return nodes_[leaves_ + i]; }

  void set(std::size_t i, double mass) {
    if (i >= capacity_) throw ContractError("SumTree::set: index out of range");
    if (!(mass >= 0.0)) throw ContractError("SumTree::set: mass must be non-negative");
    std::size_t node = leaves_ + i;
    nodes_[node] = mass;
    for (node /= 2; node >= 1; node /= 2) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }

  /// Grows capacity, keeping existing leaves.
  void grow(std::size_t new_capacity) {
    if (new_capacity <= capacity_) return;
    std::vector<double> old(capacity_);
    for (std::size_t i = 0; i < capacity_; ++i) old[i] = get(i);
    reset(new_capacity);
    for (std::size_t i = 0; i < old.size(); ++i) nodes_[leaves_ + i] = old[i];
    for (std::size_t node = leaves_ - 1; node >= 1; --node)
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }

  /// Leaf whose cumulative range [S_{i-1}, S_i) contains u, for u in [0, total).
  /// Out-of-range u is clamped; zero-mass leaves are never returned while
  /// total() > 0.
  std::size_t find(double u) const {
    if (total() <= 0.0) throw ContractError("SumTree::find: empty tree");
    if (u < 0.0) u = 0.0;
    std::size_t node = 1;
    while (node < leaves_) {
      const std::size_t left = 2 * node;
      if (u < nodes_[left] || nodes_[left + 1] <= 0.0) {
        node = left;
      } else {
        u -= nodes_[left];
        node = left + 1;
      }
    }
    std::size_t i = node - leaves_;
    // Rounding can land on a massless leaf at the far right; step back.
    while (get(i) <= 0.0 && i > 0) --i;
    return i;
  }

 private:
  void reset(std::size_t capacity) {
    if (capacity == 0) capacity = 1;
    capacity_ = capacity;
    leaves_ = 1;
    while (leaves_ < capacity) leaves_ *= 2;
    nodes_.assign(2 * leaves_, 0.0);
  }

  std::size_t capacity_ = 0;
  std::size_t leaves_ = 1;
  std::vector<double> nodes_;
};

}  // namespace forger

#endif  // FORGER_REPLAY_SUM_TREE_HPP_
