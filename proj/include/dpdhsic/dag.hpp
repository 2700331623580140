#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Directed acyclic graph over d nodes as parent sets (0-based).
struct Dag {
  int d = 0;
  std::vector<std::vector<int>> parents;

  static Dag empty(int d) { return Dag{d, std::vector<std::vector<int>>(static_cast<size_t>(d))}; }
  /// 0 -> 1 -> ... -> d-1.
  static Dag chain(int d);
};

/// Kahn topological order; throws InputError on a cycle or bad parent index.
std::vector<int> topological_order(const Dag& dag);

/// Text format: one line per node, `j: k1 k2 ...` (0-based parents), empty
/// parent lists allowed (`j:`); every node 0..d-1 needs exactly one line, in
/// any order, and d is the number of lines. Throws ParseError with the
/// offending line number, InputError on cycles.
Dag parse_dag(std::istream& in);
Dag parse_dag_file(const std::string& path);

}  // namespace dpdhsic
