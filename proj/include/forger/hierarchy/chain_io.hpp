#ifndef FORGER_HIERARCHY_CHAIN_IO_HPP_
#define FORGER_HIERARCHY_CHAIN_IO_HPP_

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "forger/hierarchy/subtasks.hpp"

namespace forger {

// Chain file, one record per line, '#' starts a comment:
//
//   forger-chain 1
//   vertex <item>
//   edge <from> <to> <count>
//   subgoal <name> <item> <quantity>      (chain order = line order)
//   back_edges <distinct> <total_weight>
//   violations <count>
//
// Only the header and subgoal lines are required, so a hand-written chain
// needs nothing else. A subgoal item of "-" marks a flat task.

struct ChainFile {
  std::optional<SubtaskGraph> graph;
  SubtaskChain chain;
};

inline void write_chain(std::ostream& os, const SubtaskChain& chain, const SubtaskGraph* graph = nullptr) {
  os << "forger-chain 1\n";
  os << "# " << chain.summary() << '\n';
  if (graph) {
    for (const auto& v : graph->vertices) os << "vertex " << v << '\n';
    for (const auto& [e, w] : graph->edges) os << "edge " << e.first << ' ' << e.second << ' ' << w << '\n';
  }
  for (const auto& g : chain.subgoals)
    os << "subgoal " << g.name << ' ' << (g.required_item.empty() ? "-" : g.required_item) << ' '
       << g.required_quantity << '\n';
  os << "back_edges " << chain.back_edges << ' ' << chain.back_edge_weight << '\n';
  os << "violations " << chain.violations << '\n';
}

inline ChainFile read_chain(std::istream& is) {
  ChainFile out;
  std::string line;
  int lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& what) {
    throw ContractError("chain file line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (!header) {
      int version = 0;
      if (kind != "forger-chain" || !(ls >> version) || version != 1) fail("expected 'forger-chain 1' header");
      header = true;
      continue;
    }
    if (kind == "vertex") {
      std::string v;
      if (!(ls >> v)) fail("vertex needs a name");
      if (!out.graph) out.graph.emplace();
      out.graph->vertices.insert(v);
    } else if (kind == "edge") {
      std::string a, b;
      int w = 0;
      if (!(ls >> a >> b >> w) || w <= 0) fail("edge needs <from> <to> <positive count>");
      if (!out.graph) out.graph.emplace();
      out.graph->edges[{a, b}] = w;
    } else if (kind == "subgoal") {
      SubgoalId g;
      if (!(ls >> g.name >> g.required_item >> g.required_quantity) || g.required_quantity < 1)
        fail("subgoal needs <name> <item> <positive quantity>");
      if (g.required_item == "-") g.required_item.clear();
      if (out.chain.index_of(g.name) >= 0) fail("duplicate subgoal " + g.name);
      out.chain.subgoals.push_back(g);
    } else if (kind == "back_edges") {
      if (!(ls >> out.chain.back_edges >> out.chain.back_edge_weight)) fail("back_edges needs two counts");
    } else if (kind == "violations") {
      if (!(ls >> out.chain.violations)) fail("violations needs a count");
    } else {
      fail("unknown record '" + kind + "'");
    }
    std::string rest;
    if (ls >> rest) fail("trailing text '" + rest + "'");
  }
  if (!header) throw ContractError("chain file: missing header");
  if (out.chain.empty()) throw ContractError("chain file: no subgoals");
  return out;
}

inline void save_chain(const std::string& path, const SubtaskChain& chain, const SubtaskGraph* graph = nullptr) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_chain(os, chain, graph);
}

inline ChainFile load_chain(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_chain(is);
}

}  // namespace forger

#endif  // FORGER_HIERARCHY_CHAIN_IO_HPP_
