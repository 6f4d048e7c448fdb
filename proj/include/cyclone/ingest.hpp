#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cyclone/amount.hpp"
#include "cyclone/graph.hpp"

namespace cyclone {

/// Header every edge file must start with.
inline constexpr std::string_view kEdgeCsvHeader = "src,dst,tx_count,amount,year_first,year_last";

/// One syntactically well-formed line of an edge file. Value ranges are
/// checked later by clean_records.
struct RawRecord {
  std::string src;
  std::string dst;
  std::int64_t tx_count = 0;
  Amount amount;
  Year year_first = 0;
  Year year_last = 0;
  std::size_t line = 0;

  bool operator==(const RawRecord&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<Diagnostic> diagnostics;
  std::size_t data_lines = 0;
  /// FNV-1a 64 over the raw file bytes, as 16 hex digits.
  std::string fingerprint;
};

struct ParseOptions {
  /// Abort once more than this many lines are malformed.
  std::size_t error_cap = 1000;
};

/// Parses one line (without its newline). Returns the diagnostic message
/// on failure.
std::variant<RawRecord, std::string> parse_edge_line(std::string_view line);

/// Parses an edge CSV. Throws InputError if the file is unreadable, the
/// header does not match, or the malformed-line cap is exceeded.
ParseResult parse_edge_file(const std::filesystem::path& path, const ParseOptions& options = {});
ParseResult parse_edge_text(std::string_view text, const ParseOptions& options = {});

struct IngestStats {
  std::size_t records_read = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t malformed_rejected = 0;
  /// Records merged into an earlier record with the same (src, dst).
  std::size_t records_aggregated = 0;
  std::size_t final_edge_count = 0;
  std::size_t final_node_count = 0;

  bool operator==(const IngestStats&) const = default;
};

struct CleanedEdges {
  /// Dense node labels in first-appearance order over surviving records.
  std::vector<std::string> labels;
  /// Edges indexing `labels`; sorted by (src id, dst id) when aggregated,
  /// input order otherwise.
  std::vector<TransactionEdge> edges;
  IngestStats stats;
  std::vector<Diagnostic> rejections;
};

/// Drops self-loops and out-of-range records; optionally merges records
/// sharing (src, dst): counts and amounts summed, years widened.
CleanedEdges clean_records(std::span<const RawRecord> records, bool aggregate = true);

struct IngestOptions {
  ParseOptions parse;
  bool aggregate = true;
};

struct IngestResult {
  TransactionGraph graph;
  IngestStats stats;
  std::vector<Diagnostic> diagnostics;
  std::string fingerprint;
};

/// parse_edge_file + clean_records + build_graph. Parse failures count
/// toward both records_read and malformed_rejected.
IngestResult ingest_edge_file(const std::filesystem::path& path, const IngestOptions& options = {});

/// Writes the graph back out in edge CSV form.
void write_edge_file(const TransactionGraph& graph, const std::filesystem::path& path);

/// Incremental FNV-1a 64.
class Fingerprint {
 public:
  void update(std::string_view bytes);
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace cyclone
