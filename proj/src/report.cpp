#include "cyclone/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cyclone/error.hpp"

namespace cyclone {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::json;
  if (text == "csv" || text == "csv-bundle") return ReportFormat::csv_bundle;
  return std::nullopt;
}

namespace {

ojson config_json(const PipelineConfig& c) {
  ojson j;
  j["weight_mode"] = std::string(to_string(c.louvain.weight_mode));
  j["resolution"] = c.louvain.resolution;
  j["gain_tolerance"] = c.louvain.gain_tolerance;
  j["seed"] = c.louvain.seed;
  j["max_levels"] = c.louvain.max_levels;
  j["t0_years"] = c.filter.t0_years;
  j["amount_threshold"] = c.filter.amount_threshold.to_string();
  j["min_community_order"] = c.filter.min_community_order;
  j["min_cycle_len"] = c.cycle.min_len;
  j["max_cycle_len"] = c.cycle.max_len;
  j["max_cycles_per_community"] = c.cycle.max_cycles_per_community;
  return j;
}

Amount amount_value(const json& v, std::string_view what) {
  if (v.is_string()) {
    const auto a = Amount::parse(v.get<std::string>());
    if (!a) throw InputError(std::string(what) + ": '" + v.get<std::string>() + "' is not an amount");
    return *a;
  }
  if (v.is_number_integer()) return Amount::from_major_units(v.get<std::int64_t>());
  if (v.is_number()) return Amount::from_minor_units(std::llround(v.get<double>() * 100.0));
  throw InputError(std::string(what) + " must be a decimal string or number");
}

void apply_config(const json& j, PipelineConfig& c) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "weight_mode") {
      const auto mode = parse_weight_mode(v.get<std::string>());
      if (!mode) throw InputError("unknown weight_mode '" + v.get<std::string>() + "'");
      c.louvain.weight_mode = *mode;
    } else if (key == "resolution") {
      c.louvain.resolution = v.get<double>();
    } else if (key == "gain_tolerance") {
      c.louvain.gain_tolerance = v.get<double>();
    } else if (key == "seed") {
      c.louvain.seed = v.get<std::uint64_t>();
    } else if (key == "max_levels") {
      c.louvain.max_levels = v.get<int>();
    } else if (key == "t0_years") {
      c.filter.t0_years = v.get<int>();
    } else if (key == "amount_threshold") {
      c.filter.amount_threshold = amount_value(v, "amount_threshold");
    } else if (key == "min_community_order") {
      c.filter.min_community_order = v.get<std::size_t>();
    } else if (key == "min_cycle_len") {
      c.cycle.min_len = v.get<std::size_t>();
    } else if (key == "max_cycle_len") {
      c.cycle.max_len = v.get<std::size_t>();
    } else if (key == "max_cycles_per_community") {
      c.cycle.max_cycles_per_community = v.get<std::size_t>();
    } else if (key == "threads") {
      c.parallelism = v.get<unsigned>();
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }
}

ojson sizes_json(const CommunitySizes& s) {
  return ojson{{"count", s.count}, {"mean", s.mean}, {"max", s.max}};
}

CommunitySizes sizes_from(const json& j) {
  return {j.at("count").get<std::size_t>(), j.at("mean").get<double>(),
          j.at("max").get<std::size_t>()};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

void write_csv_bundle(const DetectionReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());

  {
    auto out = open_out(dir / "cycles.csv");
    out << "cycle_id,community_id,length,position,src,dst,tx_count,amount,year_first,year_last\n";
    for (const auto& c : r.cycles) {
      for (std::size_t i = 0; i < c.edges.size(); ++i) {
        const auto& e = c.edges[i];
        out << c.cycle_id << ',' << c.community_id << ',' << c.length() << ',' << i << ','
            << e.src << ',' << e.dst << ',' << e.tx_count << ',' << e.amount.to_string() << ','
            << e.year_first << ',' << e.year_last << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "flagged_accounts.csv");
    out << "account\n";
    for (const auto& a : r.flagged_accounts) out << a << '\n';
  }
  {
    const auto& f = r.funnel;
    auto out = open_out(dir / "funnel.csv");
    out << "counter,value\n"
        << "nodes," << f.nodes << '\n'
        << "edges_input," << f.edges_input << '\n'
        << "self_loops_dropped," << f.self_loops_dropped << '\n'
        << "communities_total," << f.communities_total << '\n'
        << "communities_kept," << f.communities_kept << '\n'
        << "edges_in_kept_communities," << f.edges_in_kept_communities << '\n'
        << "edges_time_pass," << f.edges_time_pass << '\n'
        << "edges_amount_pass," << f.edges_amount_pass << '\n'
        << "cycles_found," << f.cycles_found << '\n'
        << "accounts_flagged," << f.accounts_flagged << '\n';
  }
  {
    auto out = open_out(dir / "histogram.csv");
    out << "length,count\n";
    for (const auto& [len, count] : r.histogram) out << len << ',' << count << '\n';
  }
}

}  // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

PipelineConfig config_from_json(std::string_view text, PipelineConfig base) {
  try {
    apply_config(json::parse(text), base);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return base;
}

std::string report_to_json(const DetectionReport& r) {
  ojson j;
  j["config"] = config_json(r.config);
  j["input_fingerprint"] = r.input_fingerprint;

  const auto& f = r.funnel;
  j["funnel"] = ojson{{"nodes", f.nodes},
                      {"edges_input", f.edges_input},
                      {"self_loops_dropped", f.self_loops_dropped},
                      {"communities_total", f.communities_total},
                      {"communities_kept", f.communities_kept},
                      {"edges_in_kept_communities", f.edges_in_kept_communities},
                      {"edges_time_pass", f.edges_time_pass},
                      {"edges_amount_pass", f.edges_amount_pass},
                      {"cycles_found", f.cycles_found},
                      {"accounts_flagged", f.accounts_flagged}};

  j["communities"] = ojson{{"modularity", r.modularity},
                           {"level_objective", r.level_objective},
                           {"sizes_all", sizes_json(r.sizes_all)},
                           {"sizes_kept", sizes_json(r.sizes_kept)},
                           {"truncated", r.truncated_communities}};

  ojson cycles = ojson::array();
  for (const auto& c : r.cycles) {
    ojson edges = ojson::array();
    for (const auto& e : c.edges)
      edges.push_back(ojson{{"src", e.src},
                            {"dst", e.dst},
                            {"tx_count", e.tx_count},
                            {"amount", e.amount.to_string()},
                            {"year_first", e.year_first},
                            {"year_last", e.year_last},
                            {"edge_id", e.edge_id}});
    cycles.push_back(ojson{{"cycle_id", c.cycle_id},
                           {"community_id", c.community_id},
                           {"length", c.length()},
                           {"nodes", c.nodes},
                           {"edges", std::move(edges)}});
  }
  j["cycles"] = std::move(cycles);

  ojson hist = ojson::object();
  for (const auto& [len, count] : r.histogram) hist[std::to_string(len)] = count;
  j["histogram"] = std::move(hist);
  j["flagged_accounts"] = r.flagged_accounts;
  return j.dump(2) + "\n";
}

DetectionReport report_from_json(std::string_view text) {
  DetectionReport r;
  try {
    const json j = json::parse(text);
    apply_config(j.at("config"), r.config);
    r.input_fingerprint = j.value("input_fingerprint", std::string{});

    const auto& f = j.at("funnel");
    auto& out = r.funnel;
    out.nodes = f.at("nodes").get<std::size_t>();
    out.edges_input = f.at("edges_input").get<std::size_t>();
    out.self_loops_dropped = f.at("self_loops_dropped").get<std::size_t>();
    out.communities_total = f.at("communities_total").get<std::size_t>();
    out.communities_kept = f.at("communities_kept").get<std::size_t>();
    out.edges_in_kept_communities = f.at("edges_in_kept_communities").get<std::size_t>();
    out.edges_time_pass = f.at("edges_time_pass").get<std::size_t>();
    out.edges_amount_pass = f.at("edges_amount_pass").get<std::size_t>();
    out.cycles_found = f.at("cycles_found").get<std::size_t>();
    out.accounts_flagged = f.at("accounts_flagged").get<std::size_t>();

    if (j.contains("communities")) {
      const auto& c = j.at("communities");
      r.modularity = c.at("modularity").get<double>();
      r.level_objective = c.at("level_objective").get<std::vector<double>>();
      r.sizes_all = sizes_from(c.at("sizes_all"));
      r.sizes_kept = sizes_from(c.at("sizes_kept"));
      r.truncated_communities = c.at("truncated").get<std::vector<CommunityId>>();
    }

    for (const auto& c : j.at("cycles")) {
      CycleRecord rec;
      rec.cycle_id = c.at("cycle_id").get<std::size_t>();
      rec.community_id = c.at("community_id").get<CommunityId>();
      rec.nodes = c.at("nodes").get<std::vector<std::string>>();
      if (c.at("length").get<std::size_t>() != rec.nodes.size())
        throw InputError("cycle " + std::to_string(rec.cycle_id) + ": length does not match nodes");
      for (const auto& e : c.at("edges")) {
        CycleEdge ce;
        ce.src = e.at("src").get<std::string>();
        ce.dst = e.at("dst").get<std::string>();
        ce.tx_count = e.value("tx_count", std::uint32_t{1});
        ce.amount = amount_value(e.at("amount"), "amount");
        ce.year_first = e.at("year_first").get<Year>();
        ce.year_last = e.at("year_last").get<Year>();
        ce.edge_id = e.value("edge_id", EdgeId{0});
        rec.edges.push_back(std::move(ce));
      }
      r.cycles.push_back(std::move(rec));
    }
    for (const auto& [len, count] : j.at("histogram").items())
      r.histogram[std::stoul(len)] = count.get<std::size_t>();
    r.flagged_accounts = j.at("flagged_accounts").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("report: bad histogram key: ") + e.what());
  }
  return r;
}

void write_report(const DetectionReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  if (format == ReportFormat::csv_bundle) {
    write_csv_bundle(report, path);
    return;
  }
  auto out = open_out(path);
  out << report_to_json(report);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

DetectionReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace cyclone
