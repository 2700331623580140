#include "dpdhsic/dag.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

namespace dpdhsic {

Dag Dag::chain(int d) {
  Dag dag = Dag::empty(d);
  for (int j = 1; j < d; ++j) dag.parents[static_cast<std::size_t>(j)].push_back(j - 1);
  return dag;
}

std::vector<int> topological_order(const Dag& dag) {
  const int d = dag.d;
  if (d < 1) throw InputError("DAG needs at least one node");
  if (static_cast<int>(dag.parents.size()) != d)
    throw InputError("DAG parent list size must equal d");
  std::vector<int> indegree(static_cast<std::size_t>(d), 0);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    for (const int k : dag.parents[static_cast<std::size_t>(j)]) {
      if (k < 0 || k >= d) throw InputError("DAG parent index out of range");
      if (k == j) throw InputError("DAG node cannot be its own parent");
      children[static_cast<std::size_t>(k)].push_back(j);
      ++indegree[static_cast<std::size_t>(j)];
    }
  }
  // Kahn's algorithm with an index-ordered frontier for a deterministic order.
  std::vector<int> frontier;
  for (int j = 0; j < d; ++j)
    if (indegree[static_cast<std::size_t>(j)] == 0) frontier.push_back(j);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(d));
  while (!frontier.empty()) {
    std::pop_heap(frontier.begin(), frontier.end(), std::greater<>());
    const int j = frontier.back();
    frontier.pop_back();
    order.push_back(j);
    for (const int c : children[static_cast<std::size_t>(j)]) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) {
        frontier.push_back(c);
        std::push_heap(frontier.begin(), frontier.end(), std::greater<>());
      }
    }
  }
  if (static_cast<int>(order.size()) != d) throw InputError("DAG contains a cycle");
  return order;
}

Dag parse_dag(std::istream& in) {
  std::string line;
  int line_number = 0;
  std::vector<std::pair<int, std::vector<int>>> entries;
  while (std::getline(in, line)) {
    ++line_number;
    // Strip CR and surrounding whitespace; skip blank lines.
    std::string t;
    for (const char c : line)
      if (c != '\r') t.push_back(c);
    const auto a = t.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = t.find_last_not_of(" \t");
    t = t.substr(a, b - a + 1);

    const auto colon = t.find(':');
    if (colon == std::string::npos)
      throw ParseError("expected 'node: parents...'", line_number);
    int node = -1;
    try {
      std::size_t pos = 0;
      node = std::stoi(t.substr(0, colon), &pos);
      std::string head = t.substr(0, colon);
      // Reject trailing junk in the node field (allow surrounding spaces).
      while (pos < head.size() && (head[pos] == ' ' || head[pos] == '\t')) ++pos;
      if (pos != head.size()) node = -1;
    } catch (const std::exception&) {
      node = -1;
    }
    if (node < 0) throw ParseError("bad node index before ':'", line_number);

    std::vector<int> parents;
    std::istringstream rest(t.substr(colon + 1));
    std::string tok;
    while (rest >> tok) {
      try {
        std::size_t pos = 0;
        const int k = std::stoi(tok, &pos);
        if (pos != tok.size() || k < 0) throw std::invalid_argument("bad");
        parents.push_back(k);
      } catch (const std::exception&) {
        throw ParseError("bad parent index '" + tok + "'", line_number);
      }
    }
    entries.emplace_back(node, std::move(parents));
  }
  if (entries.empty()) throw ParseError("empty DAG file", line_number);

  const int d = static_cast<int>(entries.size());
  Dag dag = Dag::empty(d);
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  for (const auto& [node, parents] : entries) {
    if (node >= d)
      throw ParseError("node " + std::to_string(node) + " outside 0.." +
                       std::to_string(d - 1) + " (one line per node)");
    if (seen[static_cast<std::size_t>(node)])
      throw ParseError("duplicate line for node " + std::to_string(node));
    seen[static_cast<std::size_t>(node)] = 1;
    for (const int k : parents)
      if (k >= d)
        throw ParseError("parent " + std::to_string(k) + " outside 0.." +
                         std::to_string(d - 1));
    dag.parents[static_cast<std::size_t>(node)] = parents;
  }
  topological_order(dag);  // validates acyclicity
  return dag;
}

Dag parse_dag_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_dag(in);
}

}  // namespace dpdhsic
