#pragma once

#include <cstddef>
#include <vector>

#include "cyclone/graph.hpp"

namespace cyclone {

struct CycleConfig {
  std::size_t min_len = 3;
  std::size_t max_len = 10;
  /// Enumeration stops, flagged as truncated, once this many cycles exist.
  std::size_t max_cycles_per_community = 1'000'000;

  void validate() const;
};

/// Node-simple directed cycle over the condensed arc set of a graph.
struct NodeCycle {
  /// Rotation starting at the smallest node id.
  std::vector<NodeId> nodes;
  /// arcs[i] lists every edge id from nodes[i] to nodes[(i + 1) % size].
  std::vector<std::vector<EdgeId>> arcs;

  std::size_t length() const { return nodes.size(); }
  bool operator==(const NodeCycle&) const = default;
};

struct CycleSearchResult {
  std::vector<NodeCycle> cycles;
  bool truncated = false;
};

/// Enumerates every node-simple directed cycle with min_len <= length <=
/// max_len exactly once, ordered by start node and then lexicographically.
///
/// Parallel edges between the same ordered pair form a single arc, so they
/// never multiply the cycle count. The search is Johnson-style with
/// length-aware blocking (each node carries a lock distance that is relaxed
/// when a shorter return path to the start is found), restricted to the
/// strongly connected component of the start node.
CycleSearchResult simple_cycles(const TransactionGraph& graph, const CycleConfig& config);

}  // namespace cyclone
