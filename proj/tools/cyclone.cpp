// cyclone: generate, inspect, and scan transaction networks for cycles.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyclone/error.hpp"
#include "cyclone/ingest.hpp"
#include "cyclone/pipeline.hpp"
#include "cyclone/report.hpp"
#include "cyclone/synthgen.hpp"

namespace {

using namespace cyclone;
using ojson = nlohmann::ordered_json;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Amount parse_amount_flag(const std::string& text, const char* flag) {
  const auto a = Amount::parse(text);
  if (!a) throw InputError(std::string(flag) + ": '" + text + "' is not an amount");
  return *a;
}

WeightMode parse_weight_flag(const std::string& text) {
  const auto m = parse_weight_mode(text);
  if (!m) throw InputError("--weight-mode: expected amount, count or unweighted, got '" + text + "'");
  return *m;
}

void print_stage(const StageTiming& t) {
  std::fprintf(stderr, "[cyclone] %-14s %9.3f s\n", t.stage.c_str(), t.seconds);
}

ojson stats_json(const IngestStats& s) {
  return ojson{{"records_read", s.records_read},
               {"self_loops_dropped", s.self_loops_dropped},
               {"malformed_rejected", s.malformed_rejected},
               {"records_aggregated", s.records_aggregated},
               {"final_edge_count", s.final_edge_count},
               {"final_node_count", s.final_node_count}};
}

void print_table(const ojson& j) {
  for (const auto& [key, value] : j.items())
    std::cout << key << std::string(key.size() < 28 ? 28 - key.size() : 1, ' ') << value.dump() << '\n';
}

ojson funnel_json(const FunnelCounters& f) {
  return ojson{{"nodes", f.nodes},
               {"edges_input", f.edges_input},
               {"self_loops_dropped", f.self_loops_dropped},
               {"communities_total", f.communities_total},
               {"communities_kept", f.communities_kept},
               {"edges_in_kept_communities", f.edges_in_kept_communities},
               {"edges_time_pass", f.edges_time_pass},
               {"edges_amount_pass", f.edges_amount_pass},
               {"cycles_found", f.cycles_found},
               {"accounts_flagged", f.accounts_flagged}};
}

void report_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  constexpr std::size_t kShown = 10;
  for (std::size_t i = 0; i < diagnostics.size() && i < kShown; ++i)
    std::cerr << "line " << diagnostics[i].line << ": " << diagnostics[i].message << '\n';
  if (diagnostics.size() > kShown)
    std::cerr << "... " << diagnostics.size() - kShown << " more rejected lines\n";
}

/// Pipeline flags shared by detect and communities. Each holds the
/// built-in default so --help can show it; only flags given on the command
/// line (or via the environment) override the config file.
struct PipelineFlags {
  std::string config_path;
  int t0_years = FilterConfig{}.t0_years;
  std::string amount_threshold = FilterConfig{}.amount_threshold.to_string();
  std::size_t min_community_order = FilterConfig{}.min_community_order;
  std::size_t min_cycle_len = CycleConfig{}.min_len;
  std::size_t max_cycle_len = CycleConfig{}.max_len;
  std::size_t max_cycles = CycleConfig{}.max_cycles_per_community;
  std::string weight_mode = std::string(to_string(LouvainConfig{}.weight_mode));
  double resolution = LouvainConfig{}.resolution;
  std::uint64_t seed = LouvainConfig{}.seed;
  unsigned threads = 0;

  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> overrides;

  void add_louvain(CLI::App& app) {
    overrides.emplace_back(app.add_option("--weight-mode", weight_mode, "Modularity edge weight: amount, count or unweighted")
                               ->check(CLI::IsMember({"amount", "count", "tx_count", "unweighted"})),
                           [this](PipelineConfig& c) { c.louvain.weight_mode = parse_weight_flag(weight_mode); });
    overrides.emplace_back(app.add_option("--resolution", resolution, "Modularity resolution"),
                           [this](PipelineConfig& c) { c.louvain.resolution = resolution; });
    overrides.emplace_back(app.add_option("--seed", seed, "Louvain node-order seed"),
                           [this](PipelineConfig& c) { c.louvain.seed = seed; });
  }

  void add_all(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    overrides.emplace_back(app.add_option("--t0-years", t0_years, "Time filter: keep edges with year_last - year_first < T0"),
                           [this](PipelineConfig& c) { c.filter.t0_years = t0_years; });
    overrides.emplace_back(app.add_option("--amount-threshold", amount_threshold, "Amount filter: keep edges with amount < THRESHOLD"),
                           [this](PipelineConfig& c) {
                             c.filter.amount_threshold = parse_amount_flag(amount_threshold, "--amount-threshold");
                           });
    overrides.emplace_back(app.add_option("--min-community-order", min_community_order, "Drop communities with fewer accounts"),
                           [this](PipelineConfig& c) { c.filter.min_community_order = min_community_order; });
    overrides.emplace_back(app.add_option("--min-cycle-len", min_cycle_len, "Shortest cycle reported"),
                           [this](PipelineConfig& c) { c.cycle.min_len = min_cycle_len; });
    overrides.emplace_back(app.add_option("--max-cycle-len", max_cycle_len, "Longest cycle searched"),
                           [this](PipelineConfig& c) { c.cycle.max_len = max_cycle_len; });
    overrides.emplace_back(app.add_option("--max-cycles-per-community", max_cycles, "Enumeration cap per community"),
                           [this](PipelineConfig& c) { c.cycle.max_cycles_per_community = max_cycles; });
    add_louvain(app);
    overrides.emplace_back(app.add_option("--threads", threads, "Worker threads, 0 = all cores")->envname("CYCLONE_THREADS"),
                           [this](PipelineConfig& c) { c.parallelism = threads; });
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config_path.empty()) c = config_from_json(read_text(config_path), c);
    for (const auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(c);
    c.validate();
    return c;
  }
};

int run_gen(const GenConfig& flags, const std::vector<std::string>& plants, const std::string& preset,
            const std::string& out, std::string truth_path, bool json, const CLI::App& app) {
  GenConfig cfg = preset == "rabobank" ? GenConfig::rabobank_scale() : flags;
  // With a preset, only explicitly given flags replace the preset values.
  auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  if (!preset.empty()) {
    if (given("--nodes")) cfg.nodes = flags.nodes;
    if (given("--edges")) cfg.target_edges = flags.target_edges;
    if (given("--blocks")) cfg.block_count = flags.block_count;
    if (given("--intra-fraction")) cfg.intra_block_edge_fraction = flags.intra_block_edge_fraction;
    if (given("--degree-exponent")) cfg.degree_exponent = flags.degree_exponent;
    if (given("--reverse-fraction")) cfg.reverse_fraction = flags.reverse_fraction;
    if (given("--same-year-fraction")) cfg.same_year_fraction = flags.same_year_fraction;
    if (given("--self-loops")) cfg.self_loop_records = flags.self_loop_records;
    if (given("--year-first")) cfg.year_first = flags.year_first;
    if (given("--year-last")) cfg.year_last = flags.year_last;
    if (given("--above-threshold-fraction")) cfg.above_threshold_fraction = flags.above_threshold_fraction;
    if (given("--threshold")) cfg.threshold = flags.threshold;
    cfg.seed = flags.seed;
  }
  if (!plants.empty()) {
    cfg.planted_cycles.clear();
    for (const auto& p : plants) {
      const auto colon = p.find(':');
      PlantSpec spec;
      try {
        if (colon == std::string::npos) throw std::invalid_argument(p);
        std::size_t used = 0;
        spec.length = std::stoul(p.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(p);
        const auto count = p.substr(colon + 1);
        spec.count = std::stoul(count, &used);
        if (used != count.size()) throw std::invalid_argument(p);
      } catch (const std::logic_error&) {
        throw InputError("--plant: expected LENGTH:COUNT, got '" + p + "'");
      }
      cfg.planted_cycles.push_back(spec);
    }
  }
  if (truth_path.empty()) truth_path = out + ".truth.json";

  const GroundTruth truth = generate_files(cfg, out, truth_path);
  std::size_t planted_edges = 0;
  for (const auto& c : truth.planted) planted_edges += c.nodes.size();
  ojson summary{{"edges_csv", out},
                {"truth", truth_path},
                {"instance_id", truth.instance_id},
                {"nodes", cfg.nodes},
                {"edges", cfg.target_edges},
                {"self_loop_records", cfg.self_loop_records},
                {"blocks", cfg.block_count},
                {"planted_cycles", truth.planted.size()},
                {"planted_edges", planted_edges}};
  if (json)
    std::cout << summary.dump(2) << '\n';
  else
    print_table(summary);
  return 0;
}

int run_stats(const std::string& input, bool aggregate, bool json) {
  IngestOptions opts;
  opts.aggregate = aggregate;
  const IngestResult r = ingest_edge_file(input, opts);
  report_diagnostics(r.diagnostics);
  ojson j = stats_json(r.stats);
  j["fingerprint"] = r.fingerprint;
  j["memory_bytes"] = r.graph.memory_bytes();
  if (json)
    std::cout << j.dump(2) << '\n';
  else
    print_table(j);
  return 0;
}

int run_detect(const std::string& input, const std::string& out, const std::string& format,
               const std::string& partition_out, bool json, bool quiet, const PipelineConfig& cfg) {
  const auto fmt = parse_report_format(format);
  if (!fmt) throw InputError("--format: expected json or csv, got '" + format + "'");

  PipelineOptions options;
  if (!quiet) options.on_stage = print_stage;
  DetectRun run = detect_file(input, cfg, {}, options);
  report_diagnostics(run.ingest.diagnostics);

  if (!partition_out.empty()) write_partition(run.ingest.graph, run.partition, partition_out);
  if (!out.empty()) write_report(run.report, out, *fmt);

  ojson summary = funnel_json(run.report.funnel);
  summary["modularity"] = run.report.modularity;
  if (!run.report.truncated_communities.empty())
    summary["truncated_communities"] = run.report.truncated_communities.size();
  if (json) {
    std::cout << summary.dump(2) << '\n';
  } else {
    print_table(summary);
    if (out.empty()) std::cout << '\n' << report_to_json(run.report);
  }
  return 0;
}

int run_communities(const std::string& input, const std::string& out, bool json, bool quiet,
                    const PipelineConfig& cfg) {
  const IngestResult ingest = ingest_edge_file(input);
  report_diagnostics(ingest.diagnostics);
  if (ingest.graph.edge_count() == 0) throw InputError("graph has no usable edges");
  const auto t0 = std::chrono::steady_clock::now();
  const LouvainResult r = louvain(ingest.graph, cfg.louvain);
  if (!quiet)
    print_stage({"louvain", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  if (!out.empty()) write_partition(ingest.graph, r.partition, out);

  const auto sizes = r.partition.sizes();
  std::size_t kept = 0, largest = 0;
  for (auto s : sizes) {
    if (s >= cfg.filter.min_community_order) ++kept;
    largest = std::max(largest, s);
  }
  ojson j{{"nodes", ingest.graph.node_count()},
          {"edges", ingest.graph.edge_count()},
          {"communities", r.partition.community_count()},
          {"communities_kept", kept},
          {"largest_community", largest},
          {"modularity", r.modularity},
          {"level_objective", r.level_objective}};
  if (json)
    std::cout << j.dump(2) << '\n';
  else
    print_table(j);
  return 0;
}

int run_cycles(const std::string& input, const std::string& out, bool json, const CycleConfig& cfg) {
  cfg.validate();
  const IngestResult ingest = ingest_edge_file(input);
  report_diagnostics(ingest.diagnostics);
  const TransactionGraph& g = ingest.graph;
  const CycleSearchResult found = simple_cycles(g, cfg);

  ojson cycles = ojson::array();
  for (const auto& c : found.cycles) {
    ojson nodes = ojson::array();
    for (auto v : c.nodes) nodes.push_back(g.label(v));
    ojson edges = ojson::array();
    for (const auto& arc : c.arcs)
      for (auto e : arc) {
        const auto& te = g.edge(e);
        edges.push_back(ojson{{"src", g.label(te.src)},
                              {"dst", g.label(te.dst)},
                              {"tx_count", te.tx_count},
                              {"amount", te.amount.to_string()},
                              {"year_first", te.year_first},
                              {"year_last", te.year_last},
                              {"edge_id", e}});
      }
    cycles.push_back(ojson{{"length", c.length()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}});
  }
  ojson doc{{"input_fingerprint", ingest.fingerprint},
            {"min_cycle_len", cfg.min_len},
            {"max_cycle_len", cfg.max_len},
            {"truncated", found.truncated},
            {"cycle_count", found.cycles.size()},
            {"cycles", std::move(cycles)}};
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw InputError("cannot write '" + out + "'");
    f << doc.dump(2) << '\n';
  }
  if (json) {
    std::cout << (out.empty() ? doc : ojson{{"cycle_count", found.cycles.size()}, {"truncated", found.truncated}}).dump(2)
              << '\n';
  } else {
    std::cout << "cycles " << found.cycles.size() << (found.truncated ? " (truncated)" : "") << '\n';
  }
  return 0;
}

int run_score(const std::string& report_path, const std::string& truth_path, const std::string& partition_path,
              const std::string& out, bool json) {
  const DetectionReport report = read_report(report_path);
  const GroundTruth truth = read_truth(truth_path);
  std::optional<CommunityMembership> membership;
  if (!partition_path.empty()) membership = CommunityMembership::read_csv(partition_path);
  const DetectionScore s = score_detection(report, truth, membership ? &*membership : nullptr);
  const std::string text = score_to_json(s);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw InputError("cannot write '" + out + "'");
    f << text;
  }
  if (json)
    std::cout << text;
  else
    print_table(ojson::parse(text));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transaction-network cycle detection: communities, filters, bounded simple cycles", "cyclone"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "cyclone 1.0.0");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance with planted cycles");
  GenConfig gen_cfg;
  gen_cfg.planted_cycles = {};
  std::vector<std::string> plants;
  std::string gen_preset, gen_out = "edges.csv", gen_truth;
  bool gen_json = false;
  std::string gen_threshold = gen_cfg.threshold.to_string();
  gen->add_option("--nodes", gen_cfg.nodes, "Accounts");
  gen->add_option("--edges", gen_cfg.target_edges, "Distinct directed account pairs");
  gen->add_option("--blocks", gen_cfg.block_count, "Community blocks");
  gen->add_option("--plant", plants, "Planted cycles as LENGTH:COUNT (repeatable)")->take_all()->allow_extra_args(false);
  gen->add_option("--seed", gen_cfg.seed, "Generator seed");
  gen->add_option("--intra-fraction", gen_cfg.intra_block_edge_fraction, "Share of edge stubs aimed inside blocks");
  gen->add_option("--degree-exponent", gen_cfg.degree_exponent, "Power-law exponent of the degree distribution");
  gen->add_option("--reverse-fraction", gen_cfg.reverse_fraction, "Background edges against the node ranking");
  gen->add_option("--same-year-fraction", gen_cfg.same_year_fraction, "Background edges within a single year");
  gen->add_option("--above-threshold-fraction", gen_cfg.above_threshold_fraction,
                  "Background amounts at or above the threshold");
  gen->add_option("--threshold", gen_threshold, "Reporting threshold the planted amounts stay below");
  gen->add_option("--self-loops", gen_cfg.self_loop_records, "Extra self-loop records");
  gen->add_option("--year-first", gen_cfg.year_first, "First year");
  gen->add_option("--year-last", gen_cfg.year_last, "Last year");
  gen->add_option("--preset", gen_preset, "Named configuration: rabobank")->check(CLI::IsMember({"rabobank"}));
  gen->add_option("--out", gen_out, "Edge CSV output");
  gen->add_option("--truth", gen_truth, "Ground-truth JSON output (default: OUT.truth.json)");
  gen->add_flag("--json", gen_json, "Print the summary as JSON");

  // stats
  auto* stats = app.add_subcommand("stats", "Ingest an edge file and print cleaning counters");
  std::string stats_input;
  bool stats_json_flag = false, stats_raw = false;
  stats->add_option("--input", stats_input, "Edge CSV")->required();
  stats->add_flag("--no-aggregate", stats_raw, "Keep parallel records as separate edges");
  stats->add_flag("--json", stats_json_flag, "Print JSON");

  // detect
  auto* detect = app.add_subcommand("detect", "Run the full detection pipeline");
  PipelineFlags detect_flags;
  std::string detect_input, detect_out, detect_format = "json", detect_partition;
  bool detect_json = false, detect_quiet = false;
  detect->add_option("--input", detect_input, "Edge CSV")->required();
  detect->add_option("--out", detect_out, "Report path (file for json, directory for csv)");
  detect->add_option("--format", detect_format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv", "csv-bundle"}));
  detect->add_option("--partition-out", detect_partition, "Write node_label,community_id CSV");
  detect_flags.add_all(*detect);
  detect->add_flag("--json", detect_json, "Print the funnel summary as JSON");
  detect->add_flag("--quiet", detect_quiet, "No stage timings on standard error");

  // communities
  auto* comm = app.add_subcommand("communities", "Run Louvain and dump the partition");
  PipelineFlags comm_flags;
  std::string comm_input, comm_out;
  bool comm_json = false, comm_quiet = false;
  comm->add_option("--input", comm_input, "Edge CSV")->required();
  comm->add_option("--out,--partition-out", comm_out, "Partition CSV output");
  comm->add_option("--config", comm_flags.config_path, "JSON config file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  comm_flags.add_louvain(*comm);
  comm_flags.overrides.emplace_back(
      comm->add_option("--min-community-order", comm_flags.min_community_order, "Order used for the kept count"),
      [&](PipelineConfig& c) { c.filter.min_community_order = comm_flags.min_community_order; });
  comm->add_flag("--json", comm_json, "Print JSON");
  comm->add_flag("--quiet", comm_quiet, "No stage timings on standard error");

  // cycles
  auto* cyc = app.add_subcommand("cycles", "Enumerate cycles of a whole (pre-filtered) edge file");
  CycleConfig cyc_cfg;
  std::string cyc_input, cyc_out;
  bool cyc_json = false;
  cyc->add_option("--input", cyc_input, "Edge CSV")->required();
  cyc->add_option("--out", cyc_out, "Cycle JSON output");
  cyc->add_option("--min-cycle-len", cyc_cfg.min_len, "Shortest cycle reported");
  cyc->add_option("--max-cycle-len", cyc_cfg.max_len, "Longest cycle searched");
  cyc->add_option("--max-cycles", cyc_cfg.max_cycles_per_community, "Enumeration cap");
  cyc->add_flag("--json", cyc_json, "Print JSON");

  // score
  auto* score = app.add_subcommand("score", "Score a report against generator ground truth");
  std::string score_report, score_truth, score_partition, score_out;
  bool score_json = false;
  score->add_option("--report", score_report, "Report JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--truth", score_truth, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--partition", score_partition, "Partition CSV from --partition-out, enables community_intact_recall");
  score->add_option("--out", score_out, "Score JSON output");
  score->add_flag("--json", score_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      gen_cfg.threshold = parse_amount_flag(gen_threshold, "--threshold");
      return run_gen(gen_cfg, plants, gen_preset, gen_out, gen_truth, gen_json, *gen);
    }
    if (*stats) return run_stats(stats_input, !stats_raw, stats_json_flag);
    if (*detect)
      return run_detect(detect_input, detect_out, detect_format, detect_partition, detect_json, detect_quiet,
                        detect_flags.resolve());
    if (*comm) return run_communities(comm_input, comm_out, comm_json, comm_quiet, comm_flags.resolve());
    if (*cyc) return run_cycles(cyc_input, cyc_out, cyc_json, cyc_cfg);
    if (*score) return run_score(score_report, score_truth, score_partition, score_out, score_json);
  } catch (const InputError& e) {
    std::cerr << "cyclone: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::bad_alloc&) {
    std::cerr << "cyclone: out of memory\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "cyclone: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
