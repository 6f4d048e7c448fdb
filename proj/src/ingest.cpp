#include "cyclone/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "cyclone/error.hpp"

namespace cyclone {

void Fingerprint::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
}

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

namespace {

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string data;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw InputError("cannot read '" + path.string() + "'");
  data.resize(static_cast<std::size_t>(size));
  in.seekg(0);
  in.read(data.data(), size);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return data;
}

}  // namespace

std::variant<RawRecord, std::string> parse_edge_line(std::string_view line) {
  std::string_view fields[6];
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (count == 6) return std::string("expected 6 fields, found more");
    fields[count++] = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != 6) return "expected 6 fields, found " + std::to_string(count);

  RawRecord r;
  if (fields[0].empty() || fields[1].empty()) return std::string("empty account label");
  r.src = fields[0];
  r.dst = fields[1];
  if (!parse_int(fields[2], r.tx_count))
    return "tx_count '" + std::string(fields[2]) + "' is not an integer";
  const auto amount = Amount::parse(fields[3]);
  if (!amount) return "amount '" + std::string(fields[3]) + "' is not a 2-decimal number";
  r.amount = *amount;
  if (!parse_int(fields[4], r.year_first))
    return "year_first '" + std::string(fields[4]) + "' is not an integer";
  if (!parse_int(fields[5], r.year_last))
    return "year_last '" + std::string(fields[5]) + "' is not an integer";
  return r;
}

ParseResult parse_edge_text(std::string_view text, const ParseOptions& options) {
  ParseResult result;
  Fingerprint fp;
  fp.update(text);
  result.fingerprint = fp.hex();

  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!header_seen) {
      if (line != kEdgeCsvHeader)
        throw InputError("header mismatch: expected '" + std::string(kEdgeCsvHeader) +
                         "', found '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    ++result.data_lines;
    auto parsed = parse_edge_line(line);
    if (auto* rec = std::get_if<RawRecord>(&parsed)) {
      rec->line = line_no;
      result.records.push_back(std::move(*rec));
    } else {
      result.diagnostics.push_back({line_no, std::get<std::string>(parsed)});
      if (result.diagnostics.size() > options.error_cap)
        throw InputError("more than " + std::to_string(options.error_cap) +
                         " malformed lines; last at line " + std::to_string(line_no) + ": " +
                         result.diagnostics.back().message);
    }
  }
  if (!header_seen) throw InputError("header mismatch: file is empty");
  return result;
}

ParseResult parse_edge_file(const std::filesystem::path& path, const ParseOptions& options) {
  const std::string data = read_file(path);
  return parse_edge_text(data, options);
}

CleanedEdges clean_records(std::span<const RawRecord> records, bool aggregate) {
  CleanedEdges out;
  out.stats.records_read = records.size();

  std::vector<std::size_t> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const char* reason = nullptr;
    if (r.tx_count < 1)
      reason = "tx_count must be >= 1";
    else if (r.tx_count > std::numeric_limits<std::uint32_t>::max())
      reason = "tx_count out of range";
    else if (r.amount < Amount{})
      reason = "amount must be >= 0";
    else if (r.year_first > r.year_last)
      reason = "year_first > year_last";
    if (reason) {
      ++out.stats.malformed_rejected;
      out.rejections.push_back({r.line, reason});
      continue;
    }
    if (r.src == r.dst) {
      ++out.stats.self_loops_dropped;
      continue;
    }
    kept.push_back(i);
  }

  std::unordered_map<std::string_view, NodeId> ids;
  ids.reserve(kept.size());
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = ids.emplace(label, static_cast<NodeId>(out.labels.size()));
    if (inserted) out.labels.push_back(label);
    return it->second;
  };
  out.edges.reserve(kept.size());
  for (std::size_t i : kept) {
    const auto& r = records[i];
    const NodeId src = intern(r.src);
    const NodeId dst = intern(r.dst);
    out.edges.push_back({src, dst, static_cast<std::uint32_t>(r.tx_count), r.year_first,
                         r.year_last, r.amount, 0});
  }

  if (aggregate && !out.edges.empty()) {
    std::stable_sort(out.edges.begin(), out.edges.end(), [](const auto& a, const auto& b) {
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    std::size_t w = 0;
    for (std::size_t r = 1; r < out.edges.size(); ++r) {
      auto& acc = out.edges[w];
      const auto& e = out.edges[r];
      if (e.src == acc.src && e.dst == acc.dst) {
        const std::uint64_t sum = std::uint64_t{acc.tx_count} + e.tx_count;
        acc.tx_count = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(sum, std::numeric_limits<std::uint32_t>::max()));
        acc.amount += e.amount;
        acc.year_first = std::min(acc.year_first, e.year_first);
        acc.year_last = std::max(acc.year_last, e.year_last);
        ++out.stats.records_aggregated;
      } else {
        out.edges[++w] = e;
      }
    }
    out.edges.resize(w + 1);
  }
  for (std::size_t i = 0; i < out.edges.size(); ++i) out.edges[i].origin = static_cast<EdgeId>(i);

  out.stats.final_edge_count = out.edges.size();
  out.stats.final_node_count = out.labels.size();
  return out;
}

IngestResult ingest_edge_file(const std::filesystem::path& path, const IngestOptions& options) {
  ParseResult parsed = parse_edge_file(path, options.parse);
  CleanedEdges cleaned = clean_records(parsed.records, options.aggregate);
  parsed.records.clear();
  parsed.records.shrink_to_fit();

  IngestResult result;
  result.stats = cleaned.stats;
  result.stats.records_read += parsed.diagnostics.size();
  result.stats.malformed_rejected += parsed.diagnostics.size();
  result.diagnostics = std::move(parsed.diagnostics);
  result.diagnostics.insert(result.diagnostics.end(), cleaned.rejections.begin(),
                            cleaned.rejections.end());
  std::sort(result.diagnostics.begin(), result.diagnostics.end(),
            [](const auto& a, const auto& b) { return a.line < b.line; });
  result.fingerprint = std::move(parsed.fingerprint);
  result.graph = build_graph(std::move(cleaned.labels), std::move(cleaned.edges));
  return result;
}

void write_edge_file(const TransactionGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << kEdgeCsvHeader << '\n';
  for (const auto& e : graph.edges()) {
    out << graph.label(e.src) << ',' << graph.label(e.dst) << ',' << e.tx_count << ','
        << e.amount.to_string() << ',' << e.year_first << ',' << e.year_last << '\n';
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace cyclone
