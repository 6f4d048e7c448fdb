#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cyclone/graph.hpp"

namespace cyclone {

using CommunityId = std::uint32_t;

enum class WeightMode { amount, tx_count, unweighted };

std::string_view to_string(WeightMode mode);
/// Accepts "amount", "count"/"tx_count", "unweighted".
std::optional<WeightMode> parse_weight_mode(std::string_view text);

/// Assignment of every node to one community; labels are dense from 0.
class Partition {
 public:
  Partition() = default;
  /// Relabels `assignment` densely in order of first appearance.
  explicit Partition(std::vector<CommunityId> assignment);

  static Partition singletons(std::size_t node_count);

  std::size_t node_count() const { return assignment_.size(); }
  std::size_t community_count() const { return community_count_; }
  CommunityId operator[](NodeId node) const { return assignment_[node]; }
  std::span<const CommunityId> assignment() const { return assignment_; }

  /// Number of nodes per community, indexed by label.
  std::vector<std::size_t> sizes() const;
  /// Members of every community in ascending node order, indexed by label.
  std::vector<std::vector<NodeId>> members() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<CommunityId> assignment_;
  std::size_t community_count_ = 0;
};

/// Undirected view of a transaction graph for modularity: opposite
/// directions and parallel edges fold into one symmetric weight A_ij.
/// Weights are integers (minor units, counts, or 1) so sums are exact.
class ModularityView {
 public:
  struct Neighbor {
    NodeId node;
    std::int64_t weight;
  };

  std::size_t node_count() const { return strength_.size(); }
  /// Neighbors of `node` in ascending id order, one entry per distinct neighbor.
  std::span<const Neighbor> neighbors(NodeId node) const;
  /// A_ij; zero when i and j are not adjacent.
  std::int64_t weight(NodeId i, NodeId j) const;
  /// k_i = sum_j A_ij.
  std::int64_t strength(NodeId node) const { return strength_[node]; }
  /// m = (1/2) sum_ij A_ij.
  std::int64_t total_weight() const { return total_weight_; }

 private:
  friend ModularityView build_modularity_view(const TransactionGraph&, WeightMode);

  std::vector<std::uint64_t> offsets_;
  std::vector<Neighbor> neighbors_;
  std::vector<std::int64_t> strength_;
  std::int64_t total_weight_ = 0;
};

/// Throws ModularityUndefined when every edge weight is zero.
ModularityView build_modularity_view(const TransactionGraph& graph, WeightMode mode);

/// Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j), evaluated in
/// community-summed form. Throws InputError on a size mismatch.
double modularity(const ModularityView& view, const Partition& partition);

struct LouvainConfig {
  WeightMode weight_mode = WeightMode::amount;
  double resolution = 1.0;
  double gain_tolerance = 1e-7;
  std::uint64_t seed = 0;
  int max_levels = 32;
  /// Base node order that each pass shuffles. Empty means 0..n-1.
  std::vector<NodeId> base_order;

  void validate() const;
};

struct LouvainResult {
  Partition partition;
  /// Objective after each accepted level, starting with the singleton
  /// partition. Equals modularity when resolution is 1.
  std::vector<double> level_objective;
  /// Modularity of the returned partition.
  double modularity = 0.0;
};

/// Two-phase Louvain: local moves in a seed-shuffled order, then
/// aggregation of communities into super-nodes, until a level gains no more
/// than gain_tolerance or max_levels is reached.
LouvainResult louvain(const ModularityView& view, const LouvainConfig& config);
LouvainResult louvain(const TransactionGraph& graph, const LouvainConfig& config);

/// Writes `node_label,community_id` rows.
void write_partition(const TransactionGraph& graph, const Partition& partition,
                     const std::filesystem::path& path);

}  // namespace cyclone
