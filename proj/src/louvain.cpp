#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cyclone/community.hpp"
#include "cyclone/error.hpp"

namespace cyclone {

__extension__ using Int128 = __int128;

void LouvainConfig::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw InputError("resolution must be > 0");
  if (!(gain_tolerance > 0.0)) throw InputError("gain_tolerance must be > 0");
  if (max_levels < 1) throw InputError("max_levels must be >= 1");
}

namespace {

struct Arc {
  NodeId node;
  std::int64_t weight;
};

/// Weighted undirected graph at one Louvain level. `adj` excludes self
/// loops; `loop[i]` holds A_ii (ordered-pair convention, so internal
/// weight of a merged community is counted twice).
struct LevelGraph {
  std::vector<std::uint64_t> offsets;
  std::vector<Arc> adj;
  std::vector<std::int64_t> loop;
  std::vector<std::int64_t> strength;

  std::size_t size() const { return strength.size(); }
  std::span<const Arc> arcs(NodeId v) const {
    return std::span<const Arc>(adj).subspan(offsets[v], offsets[v + 1] - offsets[v]);
  }
};

LevelGraph from_view(const ModularityView& view) {
  LevelGraph g;
  const auto n = view.node_count();
  g.offsets.assign(n + 1, 0);
  g.loop.assign(n, 0);
  g.strength.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    for (const auto& nb : view.neighbors(v)) g.adj.push_back({nb.node, nb.weight});
    g.offsets[v + 1] = g.adj.size();
    g.strength[v] = view.strength(v);
  }
  return g;
}

/// Objective sum_c [in_c / 2m - resolution * (tot_c / 2m)^2].
double objective(const LevelGraph& g, std::span<const CommunityId> comm, std::size_t k,
                 std::int64_t two_m, double resolution) {
  std::vector<std::int64_t> internal(k, 0);
  std::vector<std::int64_t> total(k, 0);
  for (NodeId v = 0; v < g.size(); ++v) {
    const auto c = comm[v];
    total[c] += g.strength[v];
    internal[c] += g.loop[v];
    for (const auto& a : g.arcs(v))
      if (comm[a.node] == c) internal[c] += a.weight;
  }
  Int128 in_sum = 0;
  Int128 tot_sq = 0;
  for (std::size_t c = 0; c < k; ++c) {
    in_sum += internal[c];
    tot_sq += Int128{total[c]} * total[c];
  }
  const long double denom = static_cast<long double>(two_m) * static_cast<long double>(two_m);
  if (resolution == 1.0)
    return static_cast<double>(static_cast<long double>(in_sum * two_m - tot_sq) / denom);
  return static_cast<double>(static_cast<long double>(in_sum) / two_m -
                             resolution * static_cast<long double>(tot_sq) / denom);
}

void shuffle(std::vector<NodeId>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
}

/// Gain of joining a community, up to a positive factor shared by every
/// candidate: 2m * w_to - resolution * tot * k. Exact when resolution is 1.
struct GainKey {
  bool exact;
  Int128 exact_value;
  long double approx_value;

  bool operator>(const GainKey& o) const {
    return exact ? exact_value > o.exact_value : approx_value > o.approx_value;
  }
  bool operator==(const GainKey& o) const {
    return exact ? exact_value == o.exact_value : approx_value == o.approx_value;
  }
};

/// Local-move phase. Returns true if any node changed community.
bool move_nodes(const LevelGraph& g, std::vector<CommunityId>& comm, std::int64_t two_m,
                double resolution, std::span<const NodeId> base_order, std::mt19937_64& rng) {
  const std::size_t n = g.size();
  std::vector<std::int64_t> tot(n, 0);
  for (NodeId v = 0; v < n; ++v) tot[comm[v]] += g.strength[v];

  const bool exact = resolution == 1.0;
  auto gain = [&](std::int64_t w_to, std::int64_t tot_c, std::int64_t k) {
    GainKey key{exact, 0, 0.0L};
    if (exact)
      key.exact_value = Int128{two_m} * w_to - Int128{tot_c} * k;
    else
      key.approx_value = static_cast<long double>(two_m) * w_to -
                         resolution * static_cast<long double>(tot_c) * k;
    return key;
  };

  std::vector<std::int64_t> w_to(n, 0);
  std::vector<char> is_touched(n, 0);
  std::vector<CommunityId> touched;
  std::vector<NodeId> order(base_order.begin(), base_order.end());
  // Ties go to the community whose label comes first in the base order,
  // which is the smallest label unless a base order is given.
  std::vector<std::uint32_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<std::uint32_t>(i);
  bool any_move = false;
  // The exact path strictly increases the objective each move, so it
  // terminates; the pass cap only guards the floating-point path.
  constexpr int kMaxPasses = 10000;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    shuffle(order, rng);
    std::size_t moves = 0;
    for (NodeId v : order) {
      const std::int64_t k = g.strength[v];
      if (k == 0) continue;
      const CommunityId own = comm[v];
      touched.clear();
      touched.push_back(own);
      is_touched[own] = 1;
      for (const auto& a : g.arcs(v)) {
        const auto c = comm[a.node];
        if (!is_touched[c]) {
          is_touched[c] = 1;
          touched.push_back(c);
        }
        w_to[c] += a.weight;
      }
      tot[own] -= k;
      CommunityId best = own;
      GainKey best_gain = gain(w_to[own], tot[own], k);
      for (CommunityId c : touched) {
        if (c == own) continue;
        const GainKey gk = gain(w_to[c], tot[c], k);
        if (gk > best_gain || (best != own && gk == best_gain && rank[c] < rank[best])) {
          best = c;
          best_gain = gk;
        }
      }
      tot[best] += k;
      comm[v] = best;
      for (CommunityId c : touched) {
        w_to[c] = 0;
        is_touched[c] = 0;
      }
      if (best != own) ++moves;
    }
    if (moves == 0) break;
    any_move = true;
  }
  return any_move;
}

/// Relabels communities densely in order of first appearance along `order`.
std::size_t renumber(std::vector<CommunityId>& comm, std::span<const NodeId> order) {
  constexpr CommunityId kUnset = std::numeric_limits<CommunityId>::max();
  std::vector<CommunityId> relabel(comm.size(), kUnset);
  CommunityId next = 0;
  for (NodeId v : order)
    if (relabel[comm[v]] == kUnset) relabel[comm[v]] = next++;
  for (auto& c : comm) c = relabel[c];
  return next;
}

LevelGraph aggregate(const LevelGraph& g, std::span<const CommunityId> comm, std::size_t k) {
  LevelGraph out;
  out.offsets.assign(k + 1, 0);
  out.loop.assign(k, 0);
  out.strength.assign(k, 0);

  std::vector<std::vector<NodeId>> members(k);
  for (NodeId v = 0; v < g.size(); ++v) members[comm[v]].push_back(v);

  std::vector<std::int64_t> acc(k, 0);
  std::vector<CommunityId> touched;
  for (CommunityId c = 0; c < k; ++c) {
    touched.clear();
    for (NodeId v : members[c]) {
      out.strength[c] += g.strength[v];
      out.loop[c] += g.loop[v];
      for (const auto& a : g.arcs(v)) {
        const auto d = comm[a.node];
        if (d == c) {
          out.loop[c] += a.weight;
          continue;
        }
        if (acc[d] == 0) touched.push_back(d);
        acc[d] += a.weight;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (CommunityId d : touched) {
      out.adj.push_back({d, acc[d]});
      acc[d] = 0;
    }
    out.offsets[c + 1] = out.adj.size();
  }
  return out;
}

}  // namespace

LouvainResult louvain(const ModularityView& view, const LouvainConfig& config) {
  config.validate();
  const std::size_t n = view.node_count();
  if (view.total_weight() <= 0) throw ModularityUndefined();
  if (!config.base_order.empty()) {
    if (config.base_order.size() != n) throw InputError("base_order must list every node once");
    std::vector<bool> seen(n, false);
    for (NodeId v : config.base_order) {
      if (v >= n || seen[v]) throw InputError("base_order must list every node once");
      seen[v] = true;
    }
  }
  const std::int64_t two_m = view.total_weight() * 2;
  std::mt19937_64 rng(config.seed);

  LevelGraph level = from_view(view);
  std::vector<NodeId> order = config.base_order;
  if (order.empty()) {
    order.resize(n);
    for (NodeId v = 0; v < n; ++v) order[v] = v;
  }

  // flat[v] = node of the current level graph holding original node v.
  std::vector<CommunityId> flat(n);
  for (NodeId v = 0; v < n; ++v) flat[v] = v;

  LouvainResult result;
  std::vector<CommunityId> singletons(n);
  for (NodeId v = 0; v < n; ++v) singletons[v] = v;
  double current = objective(level, singletons, n, two_m, config.resolution);
  result.level_objective.push_back(current);

  for (int lvl = 0; lvl < config.max_levels; ++lvl) {
    std::vector<CommunityId> comm(level.size());
    for (NodeId v = 0; v < level.size(); ++v) comm[v] = v;
    if (!move_nodes(level, comm, two_m, config.resolution, order, rng)) break;
    const std::size_t k = renumber(comm, order);
    const double next = objective(level, comm, k, two_m, config.resolution);
    if (next - current <= config.gain_tolerance) break;

    for (auto& f : flat) f = comm[f];
    current = next;
    result.level_objective.push_back(current);
    if (k == level.size()) break;
    level = aggregate(level, comm, k);
    order.resize(k);
    for (NodeId v = 0; v < k; ++v) order[v] = v;
  }

  result.partition = Partition(std::move(flat));
  result.modularity = modularity(view, result.partition);
  return result;
}

LouvainResult louvain(const TransactionGraph& graph, const LouvainConfig& config) {
  config.validate();
  return louvain(build_modularity_view(graph, config.weight_mode), config);
}

}  // namespace cyclone
