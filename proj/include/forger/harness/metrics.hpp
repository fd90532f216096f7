#ifndef FORGER_HARNESS_METRICS_HPP_
#define FORGER_HARNESS_METRICS_HPP_

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "forger/agent/agent.hpp"
#include "forger/approx/checkpoint.hpp"

namespace forger {

inline constexpr const char* kMetricsHeader = "episode,subgoal,env_reward,pseudo_reward,td_loss,demo_fraction,epsilon,steps";

/// Rows in episode order; numbers use shortest round-trip text so repeated
/// runs produce identical bytes. Wall-clock time is not written.
inline void write_metrics(std::ostream& os, const RunMetrics& m) {
  os << kMetricsHeader << '\n';
  for (const auto& r : m.rows) {
    os << r.episode << ',' << r.subgoal << ',' << format_double(r.env_reward) << ',' << format_double(r.pseudo_reward)
       << ',' << format_double(r.td_loss) << ',' << format_double(r.demo_fraction) << ','
       << format_double(r.epsilon) << ',' << r.steps << '\n';
  }
}

inline void save_metrics(const std::string& path, const RunMetrics& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_metrics(os, m);
}

inline std::vector<MetricsRow> read_metrics(std::istream& is, const std::string& name = "metrics") {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw ContractError(name + ": inconsistent header (expected '" + std::string(kMetricsHeader) + "')");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw ContractError(name + " line " + std::to_string(lineno) + ": expected 8 fields");
    try {
      MetricsRow r;
      r.episode = std::stoi(f[0]);
      r.subgoal = f[1];
      r.env_reward = parse_double(f[2]);
      r.pseudo_reward = parse_double(f[3]);
      r.td_loss = parse_double(f[4]);
      r.demo_fraction = parse_double(f[5]);
      r.epsilon = parse_double(f[6]);
      r.steps = std::stoi(f[7]);
      rows.push_back(std::move(r));
    } catch (const std::exception& ex) {
      throw ContractError(name + " line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return rows;
}

inline std::vector<MetricsRow> load_metrics(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_metrics(is, path);
}

/// Total env reward per episode index (rows of one episode are summed).
inline std::vector<double> episode_returns(const std::vector<MetricsRow>& rows) {
  std::map<int, double> by_episode;
  for (const auto& r : rows) by_episode[r.episode] += r.env_reward;
  std::vector<double> out;
  for (const auto& [e, v] : by_episode) out.push_back(v);
  return out;
}

inline double mean_of_last(const std::vector<double>& xs, std::size_t n) {
  if (xs.empty()) return 0.0;
  const std::size_t k = std::min(n, xs.size());
  double s = 0.0;
  for (std::size_t i = xs.size() - k; i < xs.size(); ++i) s += xs[i];
  return s / static_cast<double>(k);
}

}  // namespace forger

#endif  // FORGER_HARNESS_METRICS_HPP_
