#ifndef FORGER_APPROX_QFUNCTION_HPP_
#define FORGER_APPROX_QFUNCTION_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "forger/core.hpp"

namespace forger {

/// Packs observations column-wise into a (dim x batch) matrix.
inline Eigen::MatrixXd pack_columns(std::span<const Observation* const> obs, int dim) {
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    if (static_cast<int>(obs[j]->size()) != dim) throw ContractError("q_forward: observation dimension mismatch");
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(obs[j]->data(), dim);
  }
  return x;
}

/// Lowest index among the maxima.
inline int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Fully connected ReLU network; the last layer is linear.
class FeedForwardQ {
 public:
  using Grad = std::vector<DenseLayer>;

  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input, hidden..., output
  };

  FeedForwardQ() = default;

  /// sizes = {input, hidden..., actions}; He-normal weights, zero biases.
  FeedForwardQ(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw ContractError("FeedForwardQ: need at least input and output sizes");
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw ContractError("FeedForwardQ: non-positive layer size");
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / sizes[i]));
      DenseLayer layer;
      layer.weight.resize(sizes[i + 1], sizes[i]);
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = normal(rng);
      layer.bias = Eigen::VectorXd::Zero(sizes[i + 1]);
      layers_.push_back(std::move(layer));
    }
  }

  explicit FeedForwardQ(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int num_actions() const { return static_cast<int>(layers_.back().weight.rows()); }
  std::vector<int> sizes() const {
    std::vector<int> s{input_dim()};
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Eigen::MatrixXd z = (layers_[i].weight * h).colwise() + layers_[i].bias;
      if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
      h = std::move(z);
    }
    return h;
  }

  Eigen::MatrixXd forward(std::span<const Observation* const> obs) const {
    return forward(pack_columns(obs, input_dim()));
  }

  Eigen::MatrixXd forward(std::span<const Observation* const> obs, Cache& cache) const {
    cache.activations.clear();
    cache.activations.push_back(pack_columns(obs, input_dim()));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Eigen::MatrixXd z = (layers_[i].weight * cache.activations.back()).colwise() + layers_[i].bias;
      if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
      cache.activations.push_back(std::move(z));
    }
    return cache.activations.back();
  }

  std::vector<double> q_values(const Observation& o) const {
    const Observation* p = &o;
    Eigen::VectorXd q = forward(std::span<const Observation* const>(&p, 1)).col(0);
    return {q.data(), q.data() + q.size()};
  }

  Grad zero_grad() const {
    Grad g;
    for (const auto& l : layers_)
      g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return g;
  }

  /// Accumulates dLoss/dparams given dLoss/dQ (actions x batch).
  void backward(const Cache& cache, const Eigen::MatrixXd& dq, Grad& grad) const {
    Eigen::MatrixXd delta = dq;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const Eigen::MatrixXd& input = cache.activations[k];
      grad[k].weight.noalias() += delta * input.transpose();
      grad[k].bias += delta.rowwise().sum();
      if (k == 0) break;
      Eigen::MatrixXd back = layers_[k].weight.transpose() * delta;
      // ReLU derivative: input of layer k is the post-activation of layer k-1.
      delta = (input.array() > 0.0).select(back, 0.0);
    }
  }

  double l2(bool include_biases) const {
    double s = 0.0;
    for (const auto& l : layers_) {
      s += l.weight.squaredNorm();
      if (include_biases) s += l.bias.squaredNorm();
    }
    return s;
  }

  void add_l2_grad(double coef, bool include_biases, Grad& grad) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      grad[i].weight += 2.0 * coef * layers_[i].weight;
      if (include_biases) grad[i].bias += 2.0 * coef * layers_[i].bias;
    }
  }

  bool finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
};

struct ObservationHash {
  std::size_t operator()(const Observation& o) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (double x : o) h = (h ^ std::hash<double>{}(x)) * 1099511628211ULL;
    return h;
  }
};

/// Lookup table keyed by the exact observation; unseen rows read as zeros.
class TabularQ {
 public:
  using Table = std::unordered_map<Observation, std::vector<double>, ObservationHash>;
  using Grad = Table;

  struct Cache {
    std::vector<const Observation*> keys;
  };

  TabularQ() = default;
  TabularQ(int input_dim, int num_actions) : input_dim_(input_dim), num_actions_(num_actions) {
    if (input_dim <= 0 || num_actions <= 0) throw ContractError("TabularQ: non-positive dimension");
  }

  int input_dim() const { return input_dim_; }
  int num_actions() const { return num_actions_; }
  const Table& table() const { return table_; }
  Table& table() { return table_; }

  Eigen::MatrixXd forward(std::span<const Observation* const> obs) const {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(num_actions_, static_cast<Eigen::Index>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j) {
      if (static_cast<int>(obs[j]->size()) != input_dim_) throw ContractError("q_forward: observation dimension mismatch");
      auto it = table_.find(*obs[j]);
      if (it == table_.end()) continue;
      for (int a = 0; a < num_actions_; ++a) q(a, static_cast<Eigen::Index>(j)) = it->second[static_cast<std::size_t>(a)];
    }
    return q;
  }

  Eigen::MatrixXd forward(std::span<const Observation* const> obs, Cache& cache) const {
    cache.keys.assign(obs.begin(), obs.end());
    return forward(obs);
  }

  std::vector<double> q_values(const Observation& o) const {
    if (static_cast<int>(o.size()) != input_dim_) throw ContractError("q_forward: observation dimension mismatch");
    auto it = table_.find(o);
    return it == table_.end() ? std::vector<double>(static_cast<std::size_t>(num_actions_), 0.0) : it->second;
  }

  Grad zero_grad() const { return {}; }

  void backward(const Cache& cache, const Eigen::MatrixXd& dq, Grad& grad) const {
    for (std::size_t j = 0; j < cache.keys.size(); ++j) {
      auto& row = grad[*cache.keys[j]];
      row.resize(static_cast<std::size_t>(num_actions_), 0.0);
      for (int a = 0; a < num_actions_; ++a) row[static_cast<std::size_t>(a)] += dq(a, static_cast<Eigen::Index>(j));
    }
  }

  double l2(bool /*include_biases*/) const {
    double s = 0.0;
    for (const auto& [k, row] : table_)
      for (double v : row) s += v * v;
    return s;
  }

  void add_l2_grad(double coef, bool /*include_biases*/, Grad& grad) const {
    if (coef == 0.0) return;
    for (const auto& [k, row] : table_) {
      auto& g = grad[k];
      g.resize(static_cast<std::size_t>(num_actions_), 0.0);
      for (std::size_t a = 0; a < row.size(); ++a) g[a] += 2.0 * coef * row[a];
    }
  }

  /// Plain gradient step on the touched rows.
  void sgd_step(const Grad& grad, double lr) {
    for (const auto& [k, g] : grad) {
      auto& row = table_[k];
      row.resize(static_cast<std::size_t>(num_actions_), 0.0);
      for (std::size_t a = 0; a < g.size(); ++a) row[a] -= lr * g[a];
    }
  }

  bool finite() const {
    for (const auto& [k, row] : table_)
      for (double v : row)
        if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int input_dim_ = 0;
  int num_actions_ = 0;
  Table table_;
};

}  // namespace forger

#endif  // FORGER_APPROX_QFUNCTION_HPP_
