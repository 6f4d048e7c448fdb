#include <algorithm>
#include <fstream>

#include "cyclone/community.hpp"
#include "cyclone/error.hpp"

namespace cyclone {

__extension__ using Int128 = __int128;

std::string_view to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::amount: return "amount";
    case WeightMode::tx_count: return "count";
    case WeightMode::unweighted: return "unweighted";
  }
  return "amount";
}

std::optional<WeightMode> parse_weight_mode(std::string_view text) {
  if (text == "amount") return WeightMode::amount;
  if (text == "count" || text == "tx_count") return WeightMode::tx_count;
  if (text == "unweighted") return WeightMode::unweighted;
  return std::nullopt;
}

Partition::Partition(std::vector<CommunityId> assignment) : assignment_(std::move(assignment)) {
  constexpr CommunityId kUnset = std::numeric_limits<CommunityId>::max();
  CommunityId max_label = 0;
  for (auto c : assignment_) max_label = std::max(max_label, c);
  std::vector<CommunityId> relabel(assignment_.empty() ? 0 : std::size_t{max_label} + 1, kUnset);
  CommunityId next = 0;
  for (auto& c : assignment_) {
    if (relabel[c] == kUnset) relabel[c] = next++;
    c = relabel[c];
  }
  community_count_ = next;
}

Partition Partition::singletons(std::size_t node_count) {
  std::vector<CommunityId> a(node_count);
  for (std::size_t i = 0; i < node_count; ++i) a[i] = static_cast<CommunityId>(i);
  return Partition(std::move(a));
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> s(community_count_, 0);
  for (auto c : assignment_) ++s[c];
  return s;
}

std::vector<std::vector<NodeId>> Partition::members() const {
  std::vector<std::vector<NodeId>> m(community_count_);
  const auto s = sizes();
  for (std::size_t c = 0; c < community_count_; ++c) m[c].reserve(s[c]);
  for (NodeId v = 0; v < assignment_.size(); ++v) m[assignment_[v]].push_back(v);
  return m;
}

namespace {

std::int64_t edge_weight(const TransactionEdge& e, WeightMode mode) {
  switch (mode) {
    case WeightMode::amount: return e.amount.minor_units();
    case WeightMode::tx_count: return e.tx_count;
    case WeightMode::unweighted: return 1;
  }
  return 1;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw InputError("edge weight total overflows 64 bits");
  return r;
}

}  // namespace

std::span<const ModularityView::Neighbor> ModularityView::neighbors(NodeId node) const {
  return std::span<const Neighbor>(neighbors_).subspan(offsets_[node],
                                                       offsets_[node + 1] - offsets_[node]);
}

std::int64_t ModularityView::weight(NodeId i, NodeId j) const {
  const auto nbrs = neighbors(i);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j,
                                   [](const Neighbor& n, NodeId v) { return n.node < v; });
  return it != nbrs.end() && it->node == j ? it->weight : 0;
}

ModularityView build_modularity_view(const TransactionGraph& graph, WeightMode mode) {
  const std::size_t n = graph.node_count();
  ModularityView view;
  view.offsets_.assign(n + 1, 0);
  view.strength_.assign(n, 0);

  // Gather both directions of every edge at each endpoint, then fold.
  std::vector<ModularityView::Neighbor> scratch;
  for (NodeId v = 0; v < n; ++v) {
    scratch.clear();
    for (EdgeId id : graph.out_edges(v)) {
      const auto& e = graph.edge(id);
      if (e.dst != v) scratch.push_back({e.dst, edge_weight(e, mode)});
    }
    for (EdgeId id : graph.in_edges(v)) {
      const auto& e = graph.edge(id);
      if (e.src != v) scratch.push_back({e.src, edge_weight(e, mode)});
    }
    std::sort(scratch.begin(), scratch.end(),
              [](const auto& a, const auto& b) { return a.node < b.node; });
    std::int64_t strength = 0;
    for (std::size_t i = 0; i < scratch.size();) {
      ModularityView::Neighbor folded{scratch[i].node, 0};
      for (; i < scratch.size() && scratch[i].node == folded.node; ++i)
        folded.weight = checked_add(folded.weight, scratch[i].weight);
      if (folded.weight == 0) continue;
      view.neighbors_.push_back(folded);
      strength = checked_add(strength, folded.weight);
    }
    view.strength_[v] = strength;
    view.offsets_[v + 1] = view.neighbors_.size();
    view.total_weight_ = checked_add(view.total_weight_, strength);
  }
  // total so far is sum_ij A_ij = 2m.
  view.total_weight_ /= 2;
  if (view.total_weight_ <= 0) throw ModularityUndefined();
  return view;
}

double modularity(const ModularityView& view, const Partition& partition) {
  if (partition.node_count() != view.node_count())
    throw InputError("partition covers " + std::to_string(partition.node_count()) +
                     " nodes but the graph has " + std::to_string(view.node_count()));
  const std::size_t k = partition.community_count();
  std::vector<std::int64_t> internal(k, 0);
  std::vector<std::int64_t> total(k, 0);
  for (NodeId i = 0; i < view.node_count(); ++i) {
    const auto ci = partition[i];
    total[ci] += view.strength(i);
    for (const auto& nb : view.neighbors(i))
      if (partition[nb.node] == ci) internal[ci] += nb.weight;
  }
  // Q = (2m * sum in_c - sum tot_c^2) / (2m)^2, numerator exact in 128 bits.
  const Int128 two_m = Int128{view.total_weight()} * 2;
  Int128 numerator = 0;
  for (std::size_t c = 0; c < k; ++c)
    numerator += two_m * internal[c] - Int128{total[c]} * total[c];
  return static_cast<double>(static_cast<long double>(numerator) /
                             (static_cast<long double>(two_m) * static_cast<long double>(two_m)));
}

void write_partition(const TransactionGraph& graph, const Partition& partition,
                     const std::filesystem::path& path) {
  if (partition.node_count() != graph.node_count())
    throw InputError("partition does not match graph");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "node_label,community_id\n";
  for (NodeId v = 0; v < graph.node_count(); ++v)
    out << graph.label(v) << ',' << partition[v] << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace cyclone
