#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "cyclone/error.hpp"
#include "cyclone/synthgen.hpp"

namespace cyclone {

CommunityMembership CommunityMembership::from_partition(const TransactionGraph& graph,
                                                        const Partition& partition) {
  if (graph.node_count() != partition.node_count())
    throw InputError("partition does not match graph");
  CommunityMembership m;
  m.community_.reserve(graph.node_count());
  for (NodeId v = 0; v < graph.node_count(); ++v) m.community_.emplace(graph.label(v), partition[v]);
  m.sizes_ = partition.sizes();
  return m;
}

CommunityMembership CommunityMembership::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  CommunityMembership m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "node_label,community_id")
        throw InputError("partition file: unexpected header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    CommunityId c = 0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    if (comma == std::string::npos || comma == 0 || std::from_chars(first, last, c).ptr != last)
      throw InputError("partition file: malformed line " + std::to_string(line_no));
    m.community_.emplace(line.substr(0, comma), c);
    if (c >= m.sizes_.size()) m.sizes_.resize(std::size_t{c} + 1, 0);
    ++m.sizes_[c];
  }
  return m;
}

std::optional<CommunityId> CommunityMembership::community_of(std::string_view label) const {
  const auto it = community_.find(std::string(label));
  if (it == community_.end()) return std::nullopt;
  return it->second;
}

std::size_t CommunityMembership::size_of(CommunityId community) const {
  return community < sizes_.size() ? sizes_[community] : 0;
}

namespace {

/// Rotation starting at the lexicographically smallest label.
std::vector<std::string> rotation_key(const std::vector<std::string>& nodes) {
  if (nodes.empty()) return {};
  const auto first = std::min_element(nodes.begin(), nodes.end());
  std::vector<std::string> key(first, nodes.end());
  key.insert(key.end(), nodes.begin(), first);
  return key;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

DetectionScore score_detection(const DetectionReport& report, const GroundTruth& truth,
                               const CommunityMembership* membership) {
  if (!report.input_fingerprint.empty() && !truth.instance_id.empty() &&
      report.input_fingerprint != truth.instance_id)
    throw InputError("report and ground truth come from different instances (" +
                     report.input_fingerprint + " vs " + truth.instance_id + ")");

  std::map<std::vector<std::string>, const CycleRecord*> found;
  for (const auto& c : report.cycles) found.emplace(rotation_key(c.nodes), &c);

  DetectionScore s;
  s.planted = truth.planted.size();
  s.cycles_reported = report.cycles.size();
  std::set<std::vector<std::string>> planted_keys;
  const std::size_t min_order = report.config.filter.min_community_order;

  for (const auto& p : truth.planted) {
    const auto key = rotation_key(p.nodes);
    planted_keys.insert(key);
    const auto hit = found.find(key);
    const bool is_found = hit != found.end();
    if (is_found) {
      ++s.planted_found;
      // Compare each planted edge with the reported edge on the same arc.
      const CycleRecord& rec = *hit->second;
      for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        const auto& src = p.nodes[i];
        const auto& dst = p.nodes[(i + 1) % p.nodes.size()];
        const auto e = std::find_if(rec.edges.begin(), rec.edges.end(),
                                    [&](const CycleEdge& ce) { return ce.src == src && ce.dst == dst; });
        if (e == rec.edges.end() || e->amount != p.edges[i].amount ||
            e->year_first != p.edges[i].year || e->year_last != p.edges[i].year ||
            e->tx_count != p.edges[i].tx_count) {
          ++s.attribute_mismatches;
          break;
        }
      }
    }
    if (membership) {
      std::optional<CommunityId> shared;
      bool intact = true;
      for (const auto& label : p.nodes) {
        const auto c = membership->community_of(label);
        if (!c || (shared && *shared != *c)) {
          intact = false;
          break;
        }
        shared = c;
      }
      if (intact && shared && membership->size_of(*shared) >= min_order) {
        ++s.planted_intact;
        if (is_found) ++s.intact_found;
      }
    }
  }
  for (const auto& [key, rec] : found)
    if (!planted_keys.contains(key)) ++s.background_cycles;

  s.recall = ratio(s.planted_found, s.planted);
  if (membership) s.community_intact_recall = ratio(s.intact_found, s.planted_intact);
  s.precision_vs_planted = ratio(s.planted_found, s.cycles_reported);
  return s;
}

std::string score_to_json(const DetectionScore& s) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j{{"planted", s.planted},
                           {"planted_found", s.planted_found},
                           {"planted_intact", s.planted_intact},
                           {"intact_found", s.intact_found},
                           {"cycles_reported", s.cycles_reported},
                           {"background_cycles", s.background_cycles},
                           {"attribute_mismatches", s.attribute_mismatches},
                           {"recall", opt(s.recall)},
                           {"community_intact_recall", opt(s.community_intact_recall)},
                           {"precision_vs_planted", opt(s.precision_vs_planted)}};
  return j.dump(2) + "\n";
}

}  // namespace cyclone
