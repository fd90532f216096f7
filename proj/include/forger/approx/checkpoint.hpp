#ifndef FORGER_APPROX_CHECKPOINT_HPP_
#define FORGER_APPROX_CHECKPOINT_HPP_

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "forger/approx/qfunction.hpp"

namespace forger {

// Checkpoint text format, version 1:
//
//   FORGER-QNET 1
//   layers <L>
//   then per layer:
//   <rows> <cols>
//   <rows*cols weights, row-major, space separated>
//   <rows biases>
//
// Numbers use the shortest representation that round-trips exactly.

inline constexpr const char* kCheckpointMagic = "FORGER-QNET";
inline constexpr int kCheckpointVersion = 1;

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ContractError("bad number: " + s);
  return x;
}

inline void write_checkpoint(std::ostream& os, const FeedForwardQ& net) {
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "layers " << net.layers().size() << '\n';
  for (const auto& l : net.layers()) {
    os << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        os << (r == 0 && c == 0 ? "" : " ") << format_double(l.weight(r, c));
    os << '\n';
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) os << (r == 0 ? "" : " ") << format_double(l.bias(r));
    os << '\n';
  }
}

inline FeedForwardQ read_checkpoint(std::istream& is) {
  std::string magic, word;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw ContractError("checkpoint: bad magic header");
  if (version != kCheckpointVersion) throw ContractError("checkpoint: unsupported version " + std::to_string(version));
  std::size_t count = 0;
  if (!(is >> word >> count) || word != "layers" || count == 0) throw ContractError("checkpoint: bad layer count");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows <= 0 || cols <= 0) throw ContractError("checkpoint: bad layer shape");
    if (!layers.empty() && layers.back().weight.rows() != cols) throw ContractError("checkpoint: layer shapes do not chain");
    DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(is >> word)) throw ContractError("checkpoint: truncated weights");
        l.weight(r, c) = parse_double(word);
      }
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!(is >> word)) throw ContractError("checkpoint: truncated biases");
      l.bias(r) = parse_double(word);
    }
    layers.push_back(std::move(l));
  }
  return FeedForwardQ(std::move(layers));
}

inline void save_checkpoint(const std::string& path, const FeedForwardQ& net) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_checkpoint(os, net);
}

inline FeedForwardQ load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_checkpoint(is);
}

}  // namespace forger

#endif  // FORGER_APPROX_CHECKPOINT_HPP_
