#ifndef FORGER_REPLAY_FORGETTING_HPP_
#define FORGER_REPLAY_FORGETTING_HPP_

#include <algorithm>
#include <string>

#include "forger/core.hpp"

namespace forger {

/// Demo-fraction schedule over forging episodes.
///
/// forgetting_rate() returns rho, the fraction of each batch drawn from
/// demonstrations. For `linear` the forgotten share min(1, k/d) grows with k,
/// so rho = 1 - min(1, k/d) shrinks to zero at k = d. Setting
/// `rate_is_forgotten_share = false` returns min(1, k/d) itself instead.
struct ForgettingSchedule {
  enum class Kind { constant, linear, full_forget };

  Kind kind = Kind::linear;
  double rho0 = 0.5;  // constant only
  int d = 50;         // linear only: last episode that still uses demo data
  bool rate_is_forgotten_share = true;

  static ForgettingSchedule constant(double rho) { return {Kind::constant, rho, 1, true}; }
  static ForgettingSchedule linear(int d) { return {Kind::linear, 0.0, d, true}; }
  static ForgettingSchedule full_forget() { return {Kind::full_forget, 0.0, 1, true}; }

  void validate() const {
    if (kind == Kind::linear && d <= 0) throw ContractError("forgetting: d must be positive");
    if (kind == Kind::constant && (rho0 < 0.0 || rho0 > 1.0))
      throw ContractError("forgetting: constant ratio outside [0,1]");
  }

  std::string describe() const {
    switch (kind) {
      case Kind::constant: return "constant(" + std::to_string(rho0) + ")";
      case Kind::linear: return "linear(" + std::to_string(d) + ")";
      case Kind::full_forget: return "full_forget";
    }
    return "?";
  }
};

inline double forgetting_rate(const ForgettingSchedule& s, int k) {
  s.validate();
  if (k < 0) throw ContractError("forgetting_rate: negative episode index");
  switch (s.kind) {
    case ForgettingSchedule::Kind::constant: return s.rho0;
    case ForgettingSchedule::Kind::full_forget: return 0.0;
    case ForgettingSchedule::Kind::linear: {
      const double forgotten = std::min(1.0, static_cast<double>(k) / s.d);
      return s.rate_is_forgotten_share ? std::max(0.0, 1.0 - forgotten) : forgotten;
    }
  }
  return 0.0;
}

/// round-half-up of rho * batch
inline int demo_count(double rho, int batch) {
  return static_cast<int>(rho * batch + 0.5);
}

}  // namespace forger

#endif  // FORGER_REPLAY_FORGETTING_HPP_
