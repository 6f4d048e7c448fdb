#include "cyclone/graph.hpp"

#include <algorithm>
#include <limits>

#include "cyclone/error.hpp"

namespace cyclone {

LabelTable::LabelTable(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() > std::numeric_limits<NodeId>::max())
    throw GraphError("too many nodes for 32-bit node ids");
  index_.reserve(labels_.size());
  for (NodeId id = 0; id < labels_.size(); ++id) {
    auto [it, inserted] = index_.emplace(labels_[id], id);
    if (!inserted) throw GraphError("duplicate node label '" + labels_[id] + "'");
  }
}

std::optional<NodeId> LabelTable::find(std::string_view label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelTable::memory_bytes() const {
  std::size_t bytes = labels_.capacity() * sizeof(std::string);
  for (const auto& l : labels_)
    if (l.capacity() > 15) bytes += l.capacity() + 1;
  // Node-based hash map: bucket array plus one node per entry.
  bytes += index_.bucket_count() * sizeof(void*);
  bytes += index_.size() * (sizeof(std::pair<const std::string_view, NodeId>) + 2 * sizeof(void*));
  return bytes;
}

TransactionGraph::TransactionGraph()
    : labels_(std::make_shared<LabelTable>(std::vector<std::string>{})),
      out_offsets_(1, 0),
      in_offsets_(1, 0) {}

std::span<const EdgeId> TransactionGraph::out_edges(NodeId node) const {
  return std::span<const EdgeId>(out_index_).subspan(out_offsets_[node],
                                                     out_offsets_[node + 1] - out_offsets_[node]);
}

std::span<const EdgeId> TransactionGraph::in_edges(NodeId node) const {
  return std::span<const EdgeId>(in_index_).subspan(in_offsets_[node],
                                                    in_offsets_[node + 1] - in_offsets_[node]);
}

const std::string& TransactionGraph::label(NodeId node) const {
  return (*labels_)[root_id(node)];
}

std::optional<NodeId> TransactionGraph::find(std::string_view label) const {
  const auto root = labels_->find(label);
  if (!root) return std::nullopt;
  if (root_ids_.empty()) return root;
  const auto it = std::lower_bound(root_ids_.begin(), root_ids_.end(), *root);
  if (it == root_ids_.end() || *it != *root) return std::nullopt;
  return static_cast<NodeId>(it - root_ids_.begin());
}

std::size_t TransactionGraph::memory_bytes() const {
  return root_ids_.capacity() * sizeof(NodeId) + edges_.capacity() * sizeof(TransactionEdge) +
         (out_offsets_.capacity() + in_offsets_.capacity()) * sizeof(std::uint64_t) +
         (out_index_.capacity() + in_index_.capacity()) * sizeof(EdgeId);
}

TransactionGraph assemble_graph(std::shared_ptr<const LabelTable> labels,
                                std::vector<NodeId> root_ids, std::size_t node_count,
                                std::vector<TransactionEdge> edges) {
  if (edges.size() > std::numeric_limits<EdgeId>::max())
    throw GraphError("too many edges for 32-bit edge ids");
  TransactionGraph g;
  g.labels_ = std::move(labels);
  g.root_ids_ = std::move(root_ids);
  g.node_count_ = node_count;
  g.edges_ = std::move(edges);
  g.edges_.shrink_to_fit();
  g.root_ids_.shrink_to_fit();

  // Counting sort keeps input order within each node's bucket.
  g.out_offsets_.assign(node_count + 1, 0);
  g.in_offsets_.assign(node_count + 1, 0);
  for (const auto& e : g.edges_) {
    ++g.out_offsets_[e.src + 1];
    ++g.in_offsets_[e.dst + 1];
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    g.out_offsets_[i + 1] += g.out_offsets_[i];
    g.in_offsets_[i + 1] += g.in_offsets_[i];
  }
  g.out_index_.resize(g.edges_.size());
  g.in_index_.resize(g.edges_.size());
  std::vector<std::uint64_t> out_fill(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
  std::vector<std::uint64_t> in_fill(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (EdgeId id = 0; id < g.edges_.size(); ++id) {
    const auto& e = g.edges_[id];
    g.out_index_[out_fill[e.src]++] = id;
    g.in_index_[in_fill[e.dst]++] = id;
  }
  return g;
}

namespace {

void validate_attributes(const TransactionEdge& e, const LabelTable& labels) {
  if (e.src == e.dst) throw GraphError("self-loop on '" + labels[e.src] + "'");
  if (e.tx_count < 1)
    throw GraphError("edge " + labels[e.src] + "->" + labels[e.dst] + " has tx_count < 1");
  if (e.amount < Amount{})
    throw GraphError("edge " + labels[e.src] + "->" + labels[e.dst] + " has negative amount");
  if (e.year_first > e.year_last)
    throw GraphError("edge " + labels[e.src] + "->" + labels[e.dst] +
                     " has year_first > year_last");
}

}  // namespace

TransactionGraph build_graph(std::span<const std::string> node_labels,
                             std::span<const LabeledEdge> edges) {
  auto table = std::make_shared<const LabelTable>(
      std::vector<std::string>(node_labels.begin(), node_labels.end()));
  std::vector<TransactionEdge> out;
  out.reserve(edges.size());
  for (const auto& le : edges) {
    const auto src = table->find(le.src);
    if (!src) throw GraphError("edge endpoint '" + le.src + "' is not a known node");
    const auto dst = table->find(le.dst);
    if (!dst) throw GraphError("edge endpoint '" + le.dst + "' is not a known node");
    TransactionEdge e{*src, *dst, le.tx_count, le.year_first, le.year_last, le.amount,
                      static_cast<EdgeId>(out.size())};
    validate_attributes(e, *table);
    out.push_back(e);
  }
  const auto n = table->size();
  return assemble_graph(std::move(table), {}, n, std::move(out));
}

TransactionGraph build_graph(std::vector<std::string> node_labels,
                             std::vector<TransactionEdge> edges) {
  auto table = std::make_shared<const LabelTable>(std::move(node_labels));
  const auto n = table->size();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto& e = edges[i];
    if (e.src >= n || e.dst >= n)
      throw GraphError("edge " + std::to_string(i) + " references node id outside the label set");
    validate_attributes(e, *table);
    e.origin = static_cast<EdgeId>(i);
  }
  return assemble_graph(std::move(table), {}, n, std::move(edges));
}

TransactionGraph edge_subgraph(const TransactionGraph& graph, std::span<const EdgeId> keep) {
  std::vector<EdgeId> ids(keep.begin(), keep.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (!ids.empty() && ids.back() >= graph.edge_count())
    throw GraphError("edge id " + std::to_string(ids.back()) + " out of range");

  constexpr NodeId kAbsent = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> local(graph.node_count(), kAbsent);
  for (EdgeId id : ids) {
    const auto& e = graph.edge(id);
    local[e.src] = 0;
    local[e.dst] = 0;
  }
  std::vector<NodeId> root_ids;
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    if (local[v] == kAbsent) continue;
    local[v] = static_cast<NodeId>(root_ids.size());
    root_ids.push_back(graph.root_id(v));
  }
  std::vector<TransactionEdge> edges;
  edges.reserve(ids.size());
  for (EdgeId id : ids) {
    TransactionEdge e = graph.edge(id);
    e.src = local[e.src];
    e.dst = local[e.dst];
    edges.push_back(e);
  }
  const auto n = root_ids.size();
  return assemble_graph(graph.labels(), std::move(root_ids), n, std::move(edges));
}

TransactionGraph node_subgraph(const TransactionGraph& graph, std::span<const NodeId> nodes) {
  std::vector<NodeId> members(nodes.begin(), nodes.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!members.empty() && members.back() >= graph.node_count())
    throw GraphError("node id " + std::to_string(members.back()) + " out of range");

  auto local_of = [&](NodeId v) -> std::optional<NodeId> {
    const auto it = std::lower_bound(members.begin(), members.end(), v);
    if (it == members.end() || *it != v) return std::nullopt;
    return static_cast<NodeId>(it - members.begin());
  };

  std::vector<EdgeId> ids;
  for (NodeId v : members)
    for (EdgeId id : graph.out_edges(v))
      if (local_of(graph.edge(id).dst)) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  std::vector<TransactionEdge> edges;
  edges.reserve(ids.size());
  for (EdgeId id : ids) {
    TransactionEdge e = graph.edge(id);
    e.src = *local_of(e.src);
    e.dst = *local_of(e.dst);
    edges.push_back(e);
  }
  std::vector<NodeId> root_ids;
  root_ids.reserve(members.size());
  for (NodeId v : members) root_ids.push_back(graph.root_id(v));
  const auto n = root_ids.size();
  return assemble_graph(graph.labels(), std::move(root_ids), n, std::move(edges));
}

}  // namespace cyclone
