#ifndef FORGER_APPROX_OPTIMIZER_HPP_
#define FORGER_APPROX_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>

#include "forger/approx/qfunction.hpp"

namespace forger {

struct AdamConfig {
  double step_size = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state for a FeedForwardQ.
class Adam {
 public:
  Adam() = default;
  Adam(const FeedForwardQ& net, AdamConfig cfg) : cfg_(cfg), m_(net.zero_grad()), v_(net.zero_grad()) {}

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  void apply(FeedForwardQ& net, const FeedForwardQ::Grad& grad) {
    auto& layers = net.layers();
    if (grad.size() != layers.size() || m_.size() != layers.size())
      throw ContractError("Adam: gradient shape does not match parameters");
    for (const auto& g : grad)
      if (!g.weight.allFinite() || !g.bias.allFinite()) throw NumericError("Adam: non-finite gradient");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < layers.size(); ++i) {
      step(layers[i].weight, grad[i].weight, m_[i].weight, v_[i].weight, c1, c2);
      step(layers[i].bias, grad[i].bias, m_[i].bias, v_[i].bias, c1, c2);
    }
  }

 private:
  template <class P>
  void step(P& param, const P& g, P& m, P& v, double c1, double c2) {
    if (param.rows() != g.rows() || param.cols() != g.cols()) throw ContractError("Adam: shape mismatch");
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    param.array() -= cfg_.step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
  }

  AdamConfig cfg_;
  FeedForwardQ::Grad m_;
  FeedForwardQ::Grad v_;
  std::int64_t t_ = 0;
};

/// Online parameters with a lagging copy refreshed every `period` gradient steps.
template <class QF>
class TargetPair {
 public:
  TargetPair() = default;
  TargetPair(QF online, int period) : online_(std::move(online)), target_(online_), period_(period) {
    if (period < 1) throw ContractError("target sync period must be >= 1");
  }

  const QF& online() const { return online_; }
  QF& online() { return online_; }
  const QF& target() const { return target_; }
  int period() const { return period_; }
  std::int64_t gradient_steps() const { return steps_; }

  /// Call after each gradient step; copies online -> target on multiples of the period.
  bool tick() {
    ++steps_;
    if (steps_ % period_ == 0) {
      sync();
      return true;
    }
    return false;
  }

  void sync() { target_ = online_; }

 private:
  QF online_;
  QF target_;
  int period_ = 1;
  std::int64_t steps_ = 0;
};

}  // namespace forger

#endif  // FORGER_APPROX_OPTIMIZER_HPP_
