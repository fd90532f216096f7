#ifndef FORGER_ENVS_LINEWORLD_HPP_
#define FORGER_ENVS_LINEWORLD_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "forger/core.hpp"

namespace forger {

/// Point mass on [-1, 1] pushed by a bounded thrust toward a fixed target.
struct LineWorldConfig {
  double target = 0.5;
  double thrust_gain = 0.1;
  double success_band = 0.05;
  int max_steps = 200;
  double success_bonus = 100.0;
  /// agent-side action discretization (bins over [-1, 1])
  int action_bins = 7;
  /// initial position is drawn uniformly from [start_low, start_high], velocity 0
  double start_low = -1.0;
  double start_high = 1.0;

  void validate() const {
    if (target < -1.0 || target > 1.0) throw ContractError("lineworld: target outside [-1,1]");
    if (success_band <= 0.0) throw ContractError("lineworld: success band must be positive");
    if (max_steps <= 0) throw ContractError("lineworld: max_steps must be positive");
    if (action_bins < 2) throw ContractError("lineworld: need at least 2 action bins");
    if (start_low > start_high || start_low < -1.0 || start_high > 1.0)
      throw ContractError("lineworld: bad start range");
  }
};

struct LineWorldState {
  double x = 0.0;
  double v = 0.0;
  int steps = 0;
  bool done = false;
  bool success = false;
};

namespace lineworld {

/// Raw dynamics, no termination bookkeeping. Walls are inelastic: a clipped
/// position also stops the cart.
inline LineWorldState dynamics(const LineWorldConfig& cfg, LineWorldState s, double thrust) {
  if (std::abs(thrust) > 1.0) throw ContractError("lineworld: |thrust| > 1");
  s.v = s.v + cfg.thrust_gain * thrust;
  const double x = s.x + s.v;
  s.x = std::clamp(x, -1.0, 1.0);
  if (s.x != x) s.v = 0.0;
  return s;
}

inline LineWorldState generate(const LineWorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(cfg.start_low, cfg.start_high);
  LineWorldState s;
  s.x = start(rng);
  return s;
}

inline Observation observe(const LineWorldState& s) { return {s.x, s.v}; }

/// One environment step; returns the reward.
inline double step(const LineWorldConfig& cfg, LineWorldState& s, double thrust) {
  s = dynamics(cfg, s, thrust);
  ++s.steps;
  const double err = std::abs(s.x - cfg.target);
  double reward = -err;
  if (err < cfg.success_band) {
    s.success = true;
    s.done = true;
    reward += cfg.success_bonus;
  } else if (s.steps >= cfg.max_steps) {
    s.done = true;
  }
  return reward;
}

}  // namespace lineworld

/// Center of bin `i` out of `bins` uniform centers on [-1, 1].
inline double bin_center(int i, int bins) {
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins - 1);
}

/// Nearest bin center; exact ties go to the lower index.
inline Action discretize(double thrust, int bins) {
  if (bins < 2) throw ContractError("discretize: need at least 2 bins");
  int best = 0;
  double best_dist = std::abs(thrust - bin_center(0, bins));
  for (int i = 1; i < bins; ++i) {
    const double d = std::abs(thrust - bin_center(i, bins));
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return Action{best};
}

}  // namespace forger

#endif  // FORGER_ENVS_LINEWORLD_HPP_
