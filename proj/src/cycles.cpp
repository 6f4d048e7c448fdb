#include "cyclone/cycles.hpp"

#include <algorithm>
#include <limits>

#include "cyclone/error.hpp"

namespace cyclone {

void CycleConfig::validate() const {
  if (min_len < 2) throw InputError("min cycle length must be >= 2");
  if (max_len < min_len) throw InputError("max cycle length must be >= min cycle length");
  if (max_cycles_per_community < 1) throw InputError("cycle cap must be >= 1");
}

namespace {

/// Distinct successors per node in ascending order, each with the edge ids
/// realising that arc.
struct ArcIndex {
  std::vector<std::uint64_t> offsets;
  std::vector<NodeId> heads;
  std::vector<std::uint64_t> edge_offsets;  // per arc, into edge_ids
  std::vector<EdgeId> edge_ids;

  std::size_t arc_begin(NodeId v) const { return offsets[v]; }
  std::size_t arc_end(NodeId v) const { return offsets[v + 1]; }
};

ArcIndex condense(const TransactionGraph& g) {
  ArcIndex idx;
  const std::size_t n = g.node_count();
  idx.offsets.assign(n + 1, 0);
  idx.edge_offsets.push_back(0);
  std::vector<EdgeId> out;
  for (NodeId v = 0; v < n; ++v) {
    const auto ids = g.out_edges(v);
    out.assign(ids.begin(), ids.end());
    std::stable_sort(out.begin(), out.end(),
                     [&](EdgeId a, EdgeId b) { return g.edge(a).dst < g.edge(b).dst; });
    for (std::size_t i = 0; i < out.size();) {
      const NodeId head = g.edge(out[i]).dst;
      for (; i < out.size() && g.edge(out[i]).dst == head; ++i) idx.edge_ids.push_back(out[i]);
      if (head == v) {
        // self-loops never belong to a node-simple cycle of length >= 2
        idx.edge_ids.resize(idx.edge_offsets.back());
        continue;
      }
      idx.heads.push_back(head);
      idx.edge_offsets.push_back(idx.edge_ids.size());
    }
    idx.offsets[v + 1] = idx.heads.size();
  }
  return idx;
}

/// Iterative Tarjan; returns the component id of each node.
std::vector<std::uint32_t> strongly_connected(const ArcIndex& arcs, std::size_t n) {
  constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<NodeId> stack;
  std::vector<std::pair<NodeId, std::size_t>> call;  // node, next arc
  std::uint32_t next_index = 0;
  std::uint32_t next_comp = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, arcs.arc_begin(root)});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next < arcs.arc_end(v)) {
        const NodeId w = arcs.heads[next++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, arcs.arc_begin(w)});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const NodeId done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = next_comp;
        } while (w != done);
        ++next_comp;
      }
    }
  }
  return comp;
}

class BoundedSearch {
 public:
  BoundedSearch(const ArcIndex& arcs, std::span<const std::uint32_t> comp, std::size_t n,
                const CycleConfig& config, CycleSearchResult& out)
      : arcs_(arcs),
        comp_(comp),
        config_(config),
        out_(out),
        lock_(n, config.max_len),
        blocked_by_(n),
        on_path_(n, 0) {}

  /// Returns false once the cycle cap is hit.
  bool run(NodeId start) {
    start_ = start;
    path_.assign(1, start);
    on_path_[start] = 1;
    set_lock(start, 0);
    frames_.assign(1, {arcs_.arc_begin(start), config_.max_len});

    bool ok = true;
    while (!frames_.empty() && ok) {
      const NodeId v = path_.back();
      auto& frame = frames_.back();
      bool descended = false;
      while (frame.next < arcs_.arc_end(v)) {
        const std::size_t arc = frame.next++;
        const NodeId w = arcs_.heads[arc];
        if (!admissible(w)) continue;
        if (w == start_) {
          if (!emit()) {
            ok = false;
            break;
          }
          frame.blen = 1;
        } else if (path_.size() < lock_[w]) {
          set_lock(w, path_.size());
          path_.push_back(w);
          on_path_[w] = 1;
          frames_.push_back({arcs_.arc_begin(w), config_.max_len});
          descended = true;
          break;
        }
      }
      if (!ok || descended) continue;

      const std::size_t bl = frame.blen;
      frames_.pop_back();
      path_.pop_back();
      on_path_[v] = 0;
      if (!frames_.empty()) frames_.back().blen = std::min(frames_.back().blen, bl);
      if (bl < config_.max_len) {
        relax(v, bl);
      } else {
        for (std::size_t a = arcs_.arc_begin(v); a < arcs_.arc_end(v); ++a) {
          const NodeId w = arcs_.heads[a];
          if (!admissible(w)) continue;
          auto& b = blocked_by_[w];
          if (b.empty()) dirty_b_.push_back(w);
          if (std::find(b.begin(), b.end(), v) == b.end()) b.push_back(v);
        }
      }
    }
    for (NodeId v : path_) on_path_[v] = 0;
    reset();
    return ok;
  }

 private:
  struct Frame {
    std::size_t next;
    std::size_t blen;
  };

  bool admissible(NodeId w) const {
    return w == start_ || (w > start_ && comp_[w] == comp_[start_]);
  }

  void set_lock(NodeId v, std::size_t value) {
    if (lock_[v] == config_.max_len) dirty_lock_.push_back(v);
    lock_[v] = value;
  }

  void relax(NodeId v, std::size_t bl) {
    relax_.assign(1, {bl, v});
    while (!relax_.empty()) {
      const auto [b, u] = relax_.back();
      relax_.pop_back();
      const std::size_t target = config_.max_len - b + 1;
      if (lock_[u] < target) {
        set_lock(u, target);
        for (NodeId w : blocked_by_[u])
          if (!on_path_[w]) relax_.push_back({b + 1, w});
      }
    }
  }

  bool emit() {
    if (path_.size() < config_.min_len) return true;
    if (out_.cycles.size() >= config_.max_cycles_per_community) {
      out_.truncated = true;
      return false;
    }
    NodeCycle c;
    c.nodes = path_;
    c.arcs.reserve(path_.size());
    for (std::size_t i = 0; i < path_.size(); ++i) {
      const NodeId from = path_[i];
      const NodeId to = path_[(i + 1) % path_.size()];
      const auto first = arcs_.heads.begin() + static_cast<std::ptrdiff_t>(arcs_.arc_begin(from));
      const auto last = arcs_.heads.begin() + static_cast<std::ptrdiff_t>(arcs_.arc_end(from));
      const auto arc = static_cast<std::size_t>(std::lower_bound(first, last, to) - arcs_.heads.begin());
      c.arcs.emplace_back(arcs_.edge_ids.begin() + static_cast<std::ptrdiff_t>(arcs_.edge_offsets[arc]),
                          arcs_.edge_ids.begin() + static_cast<std::ptrdiff_t>(arcs_.edge_offsets[arc + 1]));
    }
    out_.cycles.push_back(std::move(c));
    return true;
  }

  // Restores lock and blocking state touched by the last start node.
  void reset() {
    for (NodeId v : dirty_lock_) lock_[v] = config_.max_len;
    dirty_lock_.clear();
    for (NodeId v : dirty_b_) blocked_by_[v].clear();
    dirty_b_.clear();
  }

  const ArcIndex& arcs_;
  std::span<const std::uint32_t> comp_;
  const CycleConfig& config_;
  CycleSearchResult& out_;

  NodeId start_ = 0;
  std::vector<std::size_t> lock_;
  std::vector<std::vector<NodeId>> blocked_by_;
  std::vector<char> on_path_;
  std::vector<NodeId> path_;
  std::vector<Frame> frames_;
  std::vector<std::pair<std::size_t, NodeId>> relax_;
  std::vector<NodeId> dirty_lock_;
  std::vector<NodeId> dirty_b_;
};

}  // namespace

CycleSearchResult simple_cycles(const TransactionGraph& graph, const CycleConfig& config) {
  config.validate();
  CycleSearchResult result;
  const std::size_t n = graph.node_count();
  if (n == 0 || graph.edge_count() == 0) return result;

  const ArcIndex arcs = condense(graph);
  const auto comp = strongly_connected(arcs, n);
  std::vector<std::size_t> comp_size(n, 0);
  for (auto c : comp) ++comp_size[c];

  BoundedSearch search(arcs, comp, n, config, result);
  for (NodeId s = 0; s < n; ++s) {
    if (comp_size[comp[s]] < 2) continue;
    if (!search.run(s)) break;
  }
  return result;
}

}  // namespace cyclone
