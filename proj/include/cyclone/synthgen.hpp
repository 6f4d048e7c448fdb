#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cyclone/amount.hpp"
#include "cyclone/community.hpp"
#include "cyclone/graph.hpp"
#include "cyclone/pipeline.hpp"

namespace cyclone {

struct PlantSpec {
  std::size_t length = 3;
  std::size_t count = 1;

  bool operator==(const PlantSpec&) const = default;
};

/// Block-model transaction network with heavy-tailed degrees and planted
/// below-threshold, same-year cycles.
struct GenConfig {
  std::size_t nodes = 1000;
  /// Distinct directed account pairs in the output, planted edges included.
  std::size_t target_edges = 2500;
  std::size_t block_count = 25;
  /// Share of each node's stubs aimed inside its block. Stubs that find no
  /// free partner there are matched globally, so the realized share is lower.
  double intra_block_edge_fraction = 0.9;
  /// Exponent of the degree power law P(d) ~ d^-exponent.
  double degree_exponent = 2.5;
  Year year_first = 2010;
  Year year_last = 2020;
  /// Background edges whose first and last year coincide.
  double same_year_fraction = 0.46;
  /// Log-space standard deviation of background amounts.
  double amount_sigma = 1.5;
  /// Mass of the amount distribution at or above `threshold`; fixes the
  /// log-space mean.
  double above_threshold_fraction = 0.12;
  Amount threshold = Amount::from_major_units(10'000);
  /// Nodes carry a random rank and background edges point up the ranking
  /// except for this fraction. Low values keep background cycles rare.
  double reverse_fraction = 0.03;
  /// Extra a->a records appended to mimic unclean raw data.
  std::size_t self_loop_records = 0;
  std::vector<PlantSpec> planted_cycles;
  std::uint64_t seed = 0;

  void validate() const;
  /// Log-space mean of the background amount distribution.
  double amount_mu() const;
  /// 1,624,030 accounts, 3,823,167 distinct pairs plus 303,876 self-loop
  /// records (4,127,043 raw records), blocks averaging 40 accounts, with
  /// block mixing and rank reversals turned down.
  static GenConfig rabobank_scale();

  bool operator==(const GenConfig&) const = default;
};

struct PlantedEdge {
  std::uint32_t tx_count = 1;
  Amount amount;
  Year year = 0;

  bool operator==(const PlantedEdge&) const = default;
};

struct PlantedCycle {
  /// Accounts in cycle order; edges[i] goes nodes[i] -> nodes[i + 1 mod L].
  std::vector<std::string> nodes;
  std::size_t block = 0;
  std::vector<PlantedEdge> edges;

  bool operator==(const PlantedCycle&) const = default;
};

struct GroundTruth {
  /// Fingerprint of the generated edge CSV; matches the report's
  /// input_fingerprint when detection ran on that file.
  std::string instance_id;
  GenConfig config;
  std::vector<PlantedCycle> planted;

  bool operator==(const GroundTruth&) const = default;
};

struct GeneratedRecord {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t tx_count = 1;
  Year year_first = 0;
  Year year_last = 0;
  Amount amount;
};

/// Fully materialised instance, before serialisation.
struct SyntheticInstance {
  std::vector<std::string> labels;
  std::vector<std::uint32_t> block_of;
  /// Output order; includes self-loop records.
  std::vector<GeneratedRecord> records;
  /// Degree each node was drawn to have.
  std::vector<std::uint32_t> target_degree;
  GroundTruth truth;
};

/// Throws InputError when the configuration is infeasible.
SyntheticInstance generate_instance(const GenConfig& config);

/// Writes the edge CSV and returns the ground truth with instance_id set.
GroundTruth write_instance(const SyntheticInstance& instance, std::ostream& edges_csv);
GroundTruth generate(const GenConfig& config, std::ostream& edges_csv);
GroundTruth generate_files(const GenConfig& config, const std::filesystem::path& edges_csv,
                           const std::filesystem::path& truth_json);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(std::string_view text);
void write_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_truth(const std::filesystem::path& path);

/// Account-to-community lookup, from an in-memory partition or a
/// `node_label,community_id` dump.
class CommunityMembership {
 public:
  static CommunityMembership from_partition(const TransactionGraph& graph, const Partition& partition);
  static CommunityMembership read_csv(const std::filesystem::path& path);

  std::optional<CommunityId> community_of(std::string_view label) const;
  std::size_t size_of(CommunityId community) const;

 private:
  std::unordered_map<std::string, CommunityId> community_;
  std::vector<std::size_t> sizes_;
};

struct DetectionScore {
  std::size_t planted = 0;
  std::size_t planted_found = 0;
  /// Planted cycles whose accounts all fell into one kept community.
  std::size_t planted_intact = 0;
  std::size_t intact_found = 0;
  std::size_t cycles_reported = 0;
  std::size_t background_cycles = 0;
  /// Found planted cycles whose reported edge attributes differ from the truth.
  std::size_t attribute_mismatches = 0;
  std::optional<double> recall;
  std::optional<double> community_intact_recall;
  std::optional<double> precision_vs_planted;
};

/// Matches report cycles to planted cycles by rotation-invariant node
/// sequence. Without `membership`, community_intact_recall stays empty.
/// Throws InputError when both sides carry different instance ids.
DetectionScore score_detection(const DetectionReport& report, const GroundTruth& truth,
                               const CommunityMembership* membership = nullptr);

std::string score_to_json(const DetectionScore& score);

}  // namespace cyclone
