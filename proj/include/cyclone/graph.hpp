#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cyclone/amount.hpp"

namespace cyclone {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
using Year = std::int32_t;

/// One directed data element: account pair, transaction count, total
/// amount, first and last year of activity.
struct TransactionEdge {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t tx_count = 1;
  Year year_first = 0;
  Year year_last = 0;
  Amount amount;
  /// Id of this edge in the root graph it was sliced from.
  EdgeId origin = 0;

  std::int64_t period() const { return std::int64_t{year_last} - year_first; }
  bool same_attributes(const TransactionEdge& other) const {
    return tx_count == other.tx_count && year_first == other.year_first &&
           year_last == other.year_last && amount == other.amount;
  }
  bool operator==(const TransactionEdge&) const = default;
};

/// Edge whose endpoints are given by external account labels.
struct LabeledEdge {
  std::string src;
  std::string dst;
  std::uint32_t tx_count = 1;
  Amount amount;
  Year year_first = 0;
  Year year_last = 0;
};

/// Account label table shared by a root graph and every subgraph cut from it.
class LabelTable {
 public:
  explicit LabelTable(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](NodeId id) const { return labels_[id]; }
  std::optional<NodeId> find(std::string_view label) const;
  std::size_t memory_bytes() const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string_view, NodeId> index_;
};

/// Immutable directed multigraph in CSR form, indexed both out- and inward.
///
/// Node ids are dense. A subgraph keeps the parent's label table and maps
/// each local node to its id in the root graph; local ids preserve the
/// parent's node order, so "smallest id" means the same thing at every
/// level of slicing.
class TransactionGraph {
 public:
  TransactionGraph();

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const TransactionEdge> edges() const { return edges_; }
  const TransactionEdge& edge(EdgeId id) const { return edges_[id]; }

  /// Edge ids leaving `node`, in input order.
  std::span<const EdgeId> out_edges(NodeId node) const;
  /// Edge ids entering `node`, in input order.
  std::span<const EdgeId> in_edges(NodeId node) const;
  std::size_t out_degree(NodeId node) const { return out_edges(node).size(); }
  std::size_t in_degree(NodeId node) const { return in_edges(node).size(); }

  const std::string& label(NodeId node) const;
  NodeId root_id(NodeId node) const { return root_ids_.empty() ? node : root_ids_[node]; }
  std::optional<NodeId> find(std::string_view label) const;
  bool is_root() const { return root_ids_.empty(); }
  const std::shared_ptr<const LabelTable>& labels() const { return labels_; }

  /// Bytes held by adjacency and edge storage, excluding the shared label table.
  std::size_t memory_bytes() const;

 private:
  friend TransactionGraph assemble_graph(std::shared_ptr<const LabelTable>, std::vector<NodeId>,
                                         std::size_t, std::vector<TransactionEdge>);

  std::shared_ptr<const LabelTable> labels_;
  std::vector<NodeId> root_ids_;
  std::size_t node_count_ = 0;
  std::vector<TransactionEdge> edges_;
  std::vector<std::uint64_t> out_offsets_;
  std::vector<std::uint64_t> in_offsets_;
  std::vector<EdgeId> out_index_;
  std::vector<EdgeId> in_index_;
};

/// Builds a root graph from labeled edges. Node ids follow the order of
/// `node_labels`; edge order is preserved.
/// Throws GraphError on a duplicate label, a dangling endpoint, a
/// self-loop, or invalid attributes.
TransactionGraph build_graph(std::span<const std::string> node_labels,
                             std::span<const LabeledEdge> edges);

/// Same as above for edges whose endpoints already index `node_labels`.
/// `origin` is overwritten with the edge's position.
TransactionGraph build_graph(std::vector<std::string> node_labels,
                             std::vector<TransactionEdge> edges);

/// Keeps exactly the listed edges and the nodes incident to them.
/// Ids may be in any order; duplicates are ignored.
TransactionGraph edge_subgraph(const TransactionGraph& graph, std::span<const EdgeId> keep);

template <typename Pred>
  requires std::predicate<Pred, const TransactionEdge&>
TransactionGraph edge_subgraph(const TransactionGraph& graph, Pred&& keep) {
  std::vector<EdgeId> ids;
  const auto edges = graph.edges();
  for (EdgeId e = 0; e < edges.size(); ++e)
    if (keep(edges[e])) ids.push_back(e);
  return edge_subgraph(graph, std::span<const EdgeId>(ids));
}

/// Keeps exactly the given nodes and every edge with both endpoints among them.
TransactionGraph node_subgraph(const TransactionGraph& graph, std::span<const NodeId> nodes);

}  // namespace cyclone
