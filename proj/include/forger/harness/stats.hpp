#ifndef FORGER_HARNESS_STATS_HPP_
#define FORGER_HARNESS_STATS_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "forger/core.hpp"

namespace forger::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1).
inline double stddev(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// sqrt of the average of the two sample variances
inline double pooled_stddev(const std::vector<double>& a, const std::vector<double>& b) {
  const double sa = stddev(a), sb = stddev(b);
  return std::sqrt(0.5 * (sa * sa + sb * sb));
}

struct TTest {
  double mean_diff = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // one-sided, H1: mean(a - b) > 0
  int dof = 0;
};

inline TTest paired_t_greater(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ContractError("paired t-test needs two equal samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTest out;
  out.dof = static_cast<int>(d.size()) - 1;
  out.mean_diff = mean(d);
  const double se = stddev(d) / std::sqrt(static_cast<double>(d.size()));
  if (se == 0.0) {
    out.t = out.mean_diff > 0 ? std::numeric_limits<double>::infinity()
            : out.mean_diff < 0 ? -std::numeric_limits<double>::infinity()
                                : 0.0;
    out.p_value = out.mean_diff > 0 ? 0.0 : out.mean_diff < 0 ? 1.0 : 0.5;
    return out;
  }
  out.t = out.mean_diff / se;
  boost::math::students_t dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

/// Welch one-sided test, H1: mean(a) < mean(b).
inline TTest welch_t_less(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ContractError("welch test needs samples of size >= 2");
  const double va = stddev(a) * stddev(a) / a.size(), vb = stddev(b) * stddev(b) / b.size();
  TTest out;
  out.mean_diff = mean(a) - mean(b);
  const double se = std::sqrt(va + vb);
  if (se == 0.0) {
    out.p_value = out.mean_diff < 0 ? 0.0 : out.mean_diff > 0 ? 1.0 : 0.5;
    return out;
  }
  out.t = out.mean_diff / se;
  const double dof = (va + vb) * (va + vb) / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
  out.dof = static_cast<int>(dof);
  boost::math::students_t dist(dof);
  out.p_value = boost::math::cdf(dist, out.t);
  return out;
}

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against expected probabilities.
inline ChiSquare chi_square(const std::vector<long>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size() || observed.size() < 2) throw ContractError("chi-square: size mismatch");
  long total = 0;
  for (long o : observed) total += o;
  ChiSquare out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probs[i] * static_cast<double>(total);
    if (e <= 0) throw ContractError("chi-square: non-positive expected count");
    out.statistic += (observed[i] - e) * (observed[i] - e) / e;
  }
  out.dof = static_cast<int>(observed.size()) - 1;
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

}  // namespace forger::stats

#endif  // FORGER_HARNESS_STATS_HPP_
