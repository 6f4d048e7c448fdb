#include "cyclone/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "cyclone/error.hpp"

namespace cyclone {

void PipelineConfig::validate() const {
  louvain.validate();
  filter.validate();
  cycle.validate();
}

namespace {

bool same_settings(const PipelineConfig& a, const PipelineConfig& b) {
  const auto& la = a.louvain;
  const auto& lb = b.louvain;
  return la.weight_mode == lb.weight_mode && la.resolution == lb.resolution &&
         la.gain_tolerance == lb.gain_tolerance && la.seed == lb.seed &&
         la.max_levels == lb.max_levels && a.filter.t0_years == b.filter.t0_years &&
         a.filter.amount_threshold == b.filter.amount_threshold &&
         a.filter.min_community_order == b.filter.min_community_order &&
         a.cycle.min_len == b.cycle.min_len && a.cycle.max_len == b.cycle.max_len &&
         a.cycle.max_cycles_per_community == b.cycle.max_cycles_per_community;
}

CommunitySizes summarize(std::span<const std::size_t> sizes) {
  CommunitySizes s;
  s.count = sizes.size();
  if (sizes.empty()) return s;
  const auto total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  s.mean = static_cast<double>(total) / static_cast<double>(sizes.size());
  s.max = *std::max_element(sizes.begin(), sizes.end());
  return s;
}

struct CommunityOutcome {
  std::size_t edges_in = 0;
  std::size_t time_pass = 0;
  std::size_t amount_pass = 0;
  std::vector<CycleRecord> cycles;
  bool truncated = false;
};

CommunityOutcome process_community(const TransactionGraph& graph, CommunityId community,
                                   std::span<const NodeId> members,
                                   const PipelineConfig& config) {
  CommunityOutcome out;
  const TransactionGraph induced = node_subgraph(graph, members);
  out.edges_in = induced.edge_count();
  const TransactionGraph timed = time_filter(induced, config.filter.t0_years);
  out.time_pass = timed.edge_count();
  const TransactionGraph cheap = amount_filter(timed, config.filter.amount_threshold);
  out.amount_pass = cheap.edge_count();

  auto found = simple_cycles(cheap, config.cycle);
  out.truncated = found.truncated;
  out.cycles.reserve(found.cycles.size());
  for (const auto& c : found.cycles) {
    CycleRecord rec;
    rec.community_id = community;
    rec.nodes.reserve(c.nodes.size());
    for (NodeId v : c.nodes) rec.nodes.push_back(cheap.label(v));
    for (const auto& arc : c.arcs) {
      for (EdgeId id : arc) {
        const auto& e = cheap.edge(id);
        rec.edges.push_back({cheap.label(e.src), cheap.label(e.dst), e.tx_count, e.amount,
                             e.year_first, e.year_last, e.origin});
      }
    }
    out.cycles.push_back(std::move(rec));
  }
  return out;
}

class StageClock {
 public:
  explicit StageClock(const PipelineOptions& options) : options_(options) {}
  void lap(std::string stage) {
    const auto now = std::chrono::steady_clock::now();
    if (options_.on_stage)
      options_.on_stage({std::move(stage), std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  const PipelineOptions& options_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

bool operator==(const DetectionReport& a, const DetectionReport& b) {
  return same_settings(a.config, b.config) && a.input_fingerprint == b.input_fingerprint &&
         a.funnel == b.funnel && a.modularity == b.modularity &&
         a.level_objective == b.level_objective && a.sizes_all == b.sizes_all &&
         a.sizes_kept == b.sizes_kept && a.cycles == b.cycles && a.histogram == b.histogram &&
         a.flagged_accounts == b.flagged_accounts &&
         a.truncated_communities == b.truncated_communities;
}

std::vector<std::string> flagged_accounts(std::span<const CycleRecord> cycles) {
  std::vector<std::string> labels;
  for (const auto& c : cycles) labels.insert(labels.end(), c.nodes.begin(), c.nodes.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

CycleHistogram histogram(std::span<const CycleRecord> cycles) {
  CycleHistogram h;
  for (const auto& c : cycles) ++h[c.length()];
  return h;
}

DetectionReport run_pipeline(const TransactionGraph& graph, const PipelineConfig& config,
                             const PipelineOptions& options) {
  config.validate();
  StageClock clock(options);

  DetectionReport report;
  report.config = config;
  report.config.parallelism = 0;
  report.config.louvain.base_order.clear();
  report.funnel.nodes = graph.node_count();
  report.funnel.edges_input = graph.edge_count();

  LouvainResult communities;
  try {
    communities = louvain(graph, config.louvain);
  } catch (const ModularityUndefined&) {
    throw InputError("graph has no usable edges");
  }
  clock.lap("louvain");
  if (options.on_partition) options.on_partition(communities.partition);

  const Partition& partition = communities.partition;
  report.modularity = communities.modularity;
  report.level_objective = communities.level_objective;
  const auto sizes = partition.sizes();
  const auto kept = community_order_filter(partition, config.filter.min_community_order);
  std::vector<std::size_t> kept_sizes;
  kept_sizes.reserve(kept.size());
  for (auto c : kept) kept_sizes.push_back(sizes[c]);
  report.sizes_all = summarize(sizes);
  report.sizes_kept = summarize(kept_sizes);
  report.funnel.communities_total = partition.community_count();
  report.funnel.communities_kept = kept.size();

  const auto members = partition.members();

  // Largest communities first for load balance; results land by index.
  std::vector<std::size_t> schedule(kept.size());
  std::iota(schedule.begin(), schedule.end(), std::size_t{0});
  std::stable_sort(schedule.begin(), schedule.end(),
                   [&](std::size_t a, std::size_t b) { return kept_sizes[a] > kept_sizes[b]; });

  std::vector<CommunityOutcome> outcomes(kept.size());
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t i = cursor++; i < schedule.size() && !failed; i = cursor++) {
        const std::size_t slot = schedule[i];
        outcomes[slot] = process_community(graph, kept[slot], members[kept[slot]], config);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  unsigned threads = config.parallelism;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, kept.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  clock.lap("filter+cycles");

  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto& o = outcomes[i];
    report.funnel.edges_in_kept_communities += o.edges_in;
    report.funnel.edges_time_pass += o.time_pass;
    report.funnel.edges_amount_pass += o.amount_pass;
    if (o.truncated) report.truncated_communities.push_back(kept[i]);
    for (auto& c : o.cycles) {
      c.cycle_id = report.cycles.size();
      report.cycles.push_back(std::move(c));
    }
    o = {};
  }
  report.histogram = histogram(report.cycles);
  report.flagged_accounts = flagged_accounts(report.cycles);
  report.funnel.cycles_found = report.cycles.size();
  report.funnel.accounts_flagged = report.flagged_accounts.size();
  clock.lap("report");
  return report;
}

DetectRun detect_file(const std::filesystem::path& input, const PipelineConfig& config,
                      const IngestOptions& ingest, const PipelineOptions& options) {
  config.validate();
  DetectRun run;
  const auto start = std::chrono::steady_clock::now();
  run.ingest = ingest_edge_file(input, ingest);
  if (options.on_stage)
    options.on_stage(
        {"ingest", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});

  PipelineOptions inner = options;
  inner.on_partition = [&](const Partition& p) {
    run.partition = p;
    if (options.on_partition) options.on_partition(p);
  };
  run.report = run_pipeline(run.ingest.graph, config, inner);
  run.report.input_fingerprint = run.ingest.fingerprint;
  run.report.funnel.self_loops_dropped = run.ingest.stats.self_loops_dropped;
  return run;
}

std::vector<std::string> report_integrity_errors(const DetectionReport& report) {
  std::vector<std::string> errors;
  const auto& f = report.funnel;
  const auto recomputed = flagged_accounts(report.cycles);
  if (recomputed != report.flagged_accounts)
    errors.push_back("flagged_accounts differs from the union of cycle nodes");
  if (f.accounts_flagged != recomputed.size())
    errors.push_back("accounts_flagged = " + std::to_string(f.accounts_flagged) +
                     " but cycles cover " + std::to_string(recomputed.size()) + " accounts");
  std::size_t hist_total = 0;
  for (const auto& [len, count] : report.histogram) hist_total += count;
  if (hist_total != f.cycles_found)
    errors.push_back("histogram sums to " + std::to_string(hist_total) + ", cycles_found is " +
                     std::to_string(f.cycles_found));
  if (report.histogram != histogram(report.cycles))
    errors.push_back("histogram does not match cycle lengths");
  if (f.cycles_found != report.cycles.size())
    errors.push_back("cycles_found does not match the cycle list");
  if (f.communities_kept > f.communities_total) errors.push_back("communities_kept > communities_total");
  if (f.edges_in_kept_communities > f.edges_input)
    errors.push_back("edges_in_kept_communities > edges_input");
  if (f.edges_time_pass > f.edges_in_kept_communities)
    errors.push_back("edges_time_pass > edges_in_kept_communities");
  if (f.edges_amount_pass > f.edges_time_pass)
    errors.push_back("edges_amount_pass > edges_time_pass");
  return errors;
}

std::vector<std::string> cycle_validation_errors(const DetectionReport& report,
                                                 const TransactionGraph& graph,
                                                 const Partition& partition) {
  std::vector<std::string> errors;
  const auto sizes = partition.sizes();
  const auto& cfg = report.config;
  std::set<std::vector<std::string>> seen;
  for (const auto& c : report.cycles) {
    const std::string where = "cycle " + std::to_string(c.cycle_id) + ": ";
    const auto len = c.length();
    if (len < cfg.cycle.min_len || len > cfg.cycle.max_len) errors.push_back(where + "length out of bounds");
    if (!seen.insert(c.nodes).second) errors.push_back(where + "duplicate cycle");
    std::vector<NodeId> ids;
    for (const auto& label : c.nodes) {
      const auto id = graph.find(label);
      if (!id) {
        errors.push_back(where + "unknown account " + label);
        continue;
      }
      ids.push_back(*id);
      if (partition[*id] != c.community_id) errors.push_back(where + label + " outside community");
    }
    if (ids.size() != len) continue;
    if (std::min_element(ids.begin(), ids.end()) != ids.begin())
      errors.push_back(where + "not in canonical rotation");
    if (std::set<NodeId>(ids.begin(), ids.end()).size() != len) errors.push_back(where + "repeated node");
    if (c.community_id >= sizes.size() || sizes[c.community_id] < cfg.filter.min_community_order)
      errors.push_back(where + "community not kept");

    std::size_t arc = 0;
    for (const auto& e : c.edges) {
      // Edges are grouped by arc; advance when the source changes.
      while (arc < len && e.src != c.nodes[arc]) ++arc;
      if (arc == len || e.dst != c.nodes[(arc + 1) % len]) {
        errors.push_back(where + "edge " + e.src + "->" + e.dst + " does not follow the cycle");
        break;
      }
      if (e.edge_id >= graph.edge_count()) {
        errors.push_back(where + "edge id out of range");
        continue;
      }
      const auto& orig = graph.edge(e.edge_id);
      if (graph.label(orig.src) != e.src || graph.label(orig.dst) != e.dst ||
          orig.amount != e.amount || orig.year_first != e.year_first ||
          orig.year_last != e.year_last || orig.tx_count != e.tx_count)
        errors.push_back(where + "edge attributes differ from the input graph");
      if (!passes_time(orig, cfg.filter.t0_years)) errors.push_back(where + "edge fails time filter");
      if (!passes_amount(orig, cfg.filter.amount_threshold))
        errors.push_back(where + "edge fails amount filter");
    }
    std::set<std::string> arcs_seen;
    for (const auto& e : c.edges) arcs_seen.insert(e.src);
    if (arcs_seen.size() != len) errors.push_back(where + "missing arc");
  }
  return errors;
}

}  // namespace cyclone
