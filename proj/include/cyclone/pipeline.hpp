#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclone/community.hpp"
#include "cyclone/cycles.hpp"
#include "cyclone/filters.hpp"
#include "cyclone/graph.hpp"
#include "cyclone/ingest.hpp"

namespace cyclone {

struct PipelineConfig {
  LouvainConfig louvain;
  FilterConfig filter;
  CycleConfig cycle;
  /// Worker threads for the per-community stages; 0 means all cores.
  /// Not part of the report: output is identical for every value.
  unsigned parallelism = 0;

  void validate() const;
};

struct CycleEdge {
  std::string src;
  std::string dst;
  std::uint32_t tx_count = 1;
  Amount amount;
  Year year_first = 0;
  Year year_last = 0;
  /// Edge id in the detected graph.
  EdgeId edge_id = 0;

  bool operator==(const CycleEdge&) const = default;
};

/// One detected cycle. `nodes` is the canonical rotation (smallest node id
/// first); `edges` walks the cycle arc by arc, listing every parallel edge
/// of an arc consecutively.
struct CycleRecord {
  std::size_t cycle_id = 0;
  CommunityId community_id = 0;
  std::vector<std::string> nodes;
  std::vector<CycleEdge> edges;

  std::size_t length() const { return nodes.size(); }
  bool operator==(const CycleRecord&) const = default;
};

struct FunnelCounters {
  std::size_t nodes = 0;
  std::size_t edges_input = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t communities_total = 0;
  std::size_t communities_kept = 0;
  std::size_t edges_in_kept_communities = 0;
  std::size_t edges_time_pass = 0;
  std::size_t edges_amount_pass = 0;
  std::size_t cycles_found = 0;
  std::size_t accounts_flagged = 0;

  bool operator==(const FunnelCounters&) const = default;
};

struct CommunitySizes {
  std::size_t count = 0;
  double mean = 0.0;
  std::size_t max = 0;

  bool operator==(const CommunitySizes&) const = default;
};

using CycleHistogram = std::map<std::size_t, std::size_t>;

struct DetectionReport {
  PipelineConfig config;
  /// Fingerprint of the input file, empty when run on an in-memory graph.
  std::string input_fingerprint;
  FunnelCounters funnel;
  double modularity = 0.0;
  std::vector<double> level_objective;
  CommunitySizes sizes_all;
  CommunitySizes sizes_kept;
  std::vector<CycleRecord> cycles;
  CycleHistogram histogram;
  std::vector<std::string> flagged_accounts;
  /// Communities whose enumeration hit max_cycles_per_community.
  std::vector<CommunityId> truncated_communities;
};

bool operator==(const DetectionReport& a, const DetectionReport& b);

/// Sorted, deduplicated union of the accounts on every cycle.
std::vector<std::string> flagged_accounts(std::span<const CycleRecord> cycles);

/// Cycle count per length.
CycleHistogram histogram(std::span<const CycleRecord> cycles);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineOptions {
  /// Called after each stage completes.
  std::function<void(const StageTiming&)> on_stage;
  /// Receives the Louvain partition, e.g. for a partition dump.
  std::function<void(const Partition&)> on_partition;
};

/// Louvain, community-order filter, then per kept community: node-induced
/// subgraph, time filter, amount filter, cycle enumeration. Throws
/// InputError("graph has no usable edges") when modularity is undefined.
DetectionReport run_pipeline(const TransactionGraph& graph, const PipelineConfig& config,
                             const PipelineOptions& options = {});

struct DetectRun {
  DetectionReport report;
  IngestResult ingest;
  Partition partition;
};

/// ingest_edge_file followed by run_pipeline, with the ingest counters and
/// input fingerprint copied into the report.
DetectRun detect_file(const std::filesystem::path& input, const PipelineConfig& config,
                      const IngestOptions& ingest = {}, const PipelineOptions& options = {});

/// Internal consistency of a report: flagged set equals the cycle-node
/// union, histogram sums to cycles_found, funnel counters are monotone.
/// Returns one message per violation.
std::vector<std::string> report_integrity_errors(const DetectionReport& report);

/// Re-checks each cycle against the graph it came from: edges exist with
/// the reported attributes, close the loop, pass both filters, and every
/// node lies in the cycle's kept community.
std::vector<std::string> cycle_validation_errors(const DetectionReport& report,
                                                 const TransactionGraph& graph,
                                                 const Partition& partition);

}  // namespace cyclone
