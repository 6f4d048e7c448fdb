#include "cyclone/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cyclone/error.hpp"
#include "cyclone/ingest.hpp"

namespace cyclone {

namespace {

/// Generator RNG. Distributions are written out here rather than taken
/// from <random> so output bytes do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  double normal() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * std::numbers::pi * u2);
    spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool spare_ = false;
  double cached_ = 0.0;
};

/// Inverse standard normal CDF by bisection on erfc.
double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::uint64_t pair_key(NodeId src, NodeId dst) { return (std::uint64_t{src} << 32) | dst; }

class Builder {
 public:
  Builder(const GenConfig& cfg, Rng& rng, SyntheticInstance& inst)
      : cfg_(cfg), rng_(rng), inst_(inst), degree_(cfg.nodes, 0), intra_degree_(cfg.nodes, 0) {
    const auto n = cfg.nodes;
    inst_.block_of.resize(n);
    for (std::size_t b = 0; b < cfg.block_count; ++b)
      for (std::size_t v = block_lo(b); v < block_lo(b + 1); ++v)
        inst_.block_of[v] = static_cast<std::uint32_t>(b);

    std::vector<std::uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    rng_.shuffle(ids);
    inst_.labels.reserve(n);
    for (auto id : ids) inst_.labels.push_back("A" + std::to_string(id));

    rank_.resize(n);
    for (auto& r : rank_) r = rng_.uniform();
    pairs_.reserve(cfg.target_edges + cfg.target_edges / 4);
  }

  std::size_t block_lo(std::size_t b) const { return b * cfg_.nodes / cfg_.block_count; }
  std::size_t edge_count() const { return pairs_.size(); }
  std::span<const std::uint32_t> degrees() const { return degree_; }

  void plant() {
    std::vector<std::uint32_t> order(cfg_.block_count);
    std::iota(order.begin(), order.end(), 0u);
    rng_.shuffle(order);
    std::vector<std::vector<NodeId>> pools(cfg_.block_count);
    std::vector<char> pool_ready(cfg_.block_count, 0);
    std::size_t cursor = 0;

    for (const auto& spec : cfg_.planted_cycles) {
      for (std::size_t k = 0; k < spec.count; ++k) {
        std::size_t tries = 0;
        std::uint32_t block = 0;
        for (;; ++tries) {
          if (tries == order.size())
            throw InputError("infeasible config: no block has " + std::to_string(spec.length) +
                             " unused nodes for another planted cycle");
          block = order[(cursor + tries) % order.size()];
          if (!pool_ready[block]) {
            for (std::size_t v = block_lo(block); v < block_lo(block + 1); ++v)
              pools[block].push_back(static_cast<NodeId>(v));
            rng_.shuffle(pools[block]);
            pool_ready[block] = 1;
          }
          if (pools[block].size() >= spec.length) break;
        }
        cursor = (cursor + tries + 1) % order.size();

        std::vector<NodeId> nodes(pools[block].end() - static_cast<std::ptrdiff_t>(spec.length),
                                  pools[block].end());
        pools[block].resize(pools[block].size() - spec.length);

        PlantedCycle cycle;
        cycle.block = block;
        const Year year = cfg_.year_first + static_cast<Year>(rng_.below(
                                                static_cast<std::uint64_t>(cfg_.year_last - cfg_.year_first) + 1));
        // Structured just under the threshold; funds come back a little
        // smaller at every hop.
        const auto ceiling = static_cast<double>(cfg_.threshold.minor_units());
        double cents = ceiling * (0.80 + 0.19 * rng_.uniform());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          const NodeId src = nodes[i];
          const NodeId dst = nodes[(i + 1) % nodes.size()];
          const auto amount = Amount::from_minor_units(
              std::clamp<std::int64_t>(std::llround(cents), 1, cfg_.threshold.minor_units() - 1));
          const auto tx = static_cast<std::uint32_t>(1 + rng_.below(3));
          add(src, dst, {src, dst, tx, year, year, amount});
          cycle.nodes.push_back(inst_.labels[src]);
          cycle.edges.push_back({tx, amount, year});
          cents *= 1.0 - 0.03 * rng_.uniform();
        }
        inst_.truth.planted.push_back(std::move(cycle));
      }
    }
  }

  /// Draws the target degree sequence so it sums to at most 2 * edges.
  void draw_degrees(std::size_t edges) {
    const std::size_t n = cfg_.nodes;
    const double tail = 1.0 / (cfg_.degree_exponent - 1.0);
    std::vector<double> raw(n);
    for (auto& r : raw) r = std::pow(1.0 - rng_.uniform(), -tail);
    const std::size_t mean_block = std::max<std::size_t>(2, n / cfg_.block_count);
    const auto cap = static_cast<double>(std::min<std::size_t>(n - 1, std::max<std::size_t>(8, mean_block)));

    auto degrees_for = [&](double scale, std::vector<std::uint32_t>* out) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::clamp(std::round(scale * raw[i]), 1.0, std::max(1.0, cap));
        total += static_cast<std::size_t>(d);
        if (out) (*out)[i] = static_cast<std::uint32_t>(d);
      }
      return total;
    };
    const std::size_t budget = 2 * edges;
    double lo = 0.0, hi = 1.0;
    while (degrees_for(hi, nullptr) < budget && hi < 1e9) hi *= 2.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (degrees_for(mid, nullptr) <= budget)
        lo = mid;
      else
        hi = mid;
    }
    inst_.target_degree.assign(n, 0);
    degrees_for(lo, &inst_.target_degree);

    cumulative_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
      cumulative_[i + 1] = cumulative_[i] + inst_.target_degree[i];
  }

  /// Configuration-model pairing of the stubs each node still lacks. Each
  /// node's share of block-internal stubs is drawn once; pairs rejected as
  /// self-loops or duplicates leave their stubs open for the next round, and
  /// block-internal stubs still open after kBlockRounds go global.
  void match_stubs(std::size_t edge_budget) {
    std::vector<std::uint32_t> want_intra(cfg_.nodes, 0);
    for (NodeId v = 0; v < cfg_.nodes; ++v)
      for (std::uint32_t s = 0; s < inst_.target_degree[v]; ++s)
        if (rng_.uniform() < cfg_.intra_block_edge_fraction) ++want_intra[v];

    constexpr int kRounds = 12;
    constexpr int kBlockRounds = 6;
    for (int round = 0; round < kRounds && edge_count() < edge_budget; ++round) {
      std::vector<std::vector<NodeId>> intra(cfg_.block_count);
      std::vector<NodeId> global;
      for (NodeId v = 0; v < cfg_.nodes; ++v) {
        if (degree_[v] >= inst_.target_degree[v]) continue;
        const std::uint32_t open = inst_.target_degree[v] - degree_[v];
        std::uint32_t in_block = 0;
        if (round < kBlockRounds && want_intra[v] > intra_degree_[v])
          in_block = std::min(open, want_intra[v] - intra_degree_[v]);
        for (std::uint32_t s = 0; s < in_block; ++s) intra[inst_.block_of[v]].push_back(v);
        for (std::uint32_t s = in_block; s < open; ++s) global.push_back(v);
      }
      const std::size_t before = edge_count();
      auto pair_up = [&](std::vector<NodeId>& stubs) {
        rng_.shuffle(stubs);
        for (std::size_t i = 0; i + 1 < stubs.size() && edge_count() < edge_budget; i += 2)
          try_connect(stubs[i], stubs[i + 1]);
      };
      for (auto& stubs : intra) pair_up(stubs);
      pair_up(global);
      if (edge_count() == before && round >= kBlockRounds) break;
    }
  }

  /// Every node ends up with at least one edge.
  void cover(std::size_t edge_budget) {
    for (NodeId v = 0; v < cfg_.nodes; ++v) {
      if (degree_[v] > 0) continue;
      bool done = false;
      for (int attempt = 0; attempt < 64 && !done; ++attempt) {
        if (edge_count() >= edge_budget)
          throw InputError("infeasible config: target_edges too small to give every node an edge");
        done = try_connect(v, partner_of(v));
      }
      if (!done) throw InputError("infeasible config: cannot connect node " + std::to_string(v));
    }
  }

  /// Adds degree-weighted random edges until `edge_budget` is reached.
  void top_up(std::size_t edge_budget) {
    const std::size_t max_attempts = 64 * edge_budget + 1'000'000;
    std::size_t attempts = 0;
    while (edge_count() < edge_budget) {
      if (++attempts > max_attempts)
        throw InputError("infeasible config: cannot place " + std::to_string(edge_budget) +
                         " distinct edges");
      const NodeId u = sample(0, cfg_.nodes);
      try_connect(u, partner_of(u));
    }
  }

  void add_self_loops(std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = static_cast<NodeId>(rng_.below(cfg_.nodes));
      GeneratedRecord r = background_attributes();
      r.src = r.dst = v;
      inst_.records.push_back(r);
    }
  }

 private:
  NodeId sample(std::size_t lo, std::size_t hi) {
    const auto base = cumulative_[lo];
    const auto span = cumulative_[hi] - base;
    if (span == 0) return static_cast<NodeId>(lo + rng_.below(hi - lo));
    const auto target = base + rng_.below(span);
    const auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(lo),
                                     cumulative_.begin() + static_cast<std::ptrdiff_t>(hi) + 1, target);
    return static_cast<NodeId>(it - cumulative_.begin() - 1);
  }

  NodeId partner_of(NodeId v) {
    if (rng_.uniform() < cfg_.intra_block_edge_fraction) {
      const auto b = inst_.block_of[v];
      return sample(block_lo(b), block_lo(b + 1));
    }
    return sample(0, cfg_.nodes);
  }

  GeneratedRecord background_attributes() {
    GeneratedRecord r;
    const auto span = static_cast<std::uint64_t>(cfg_.year_last - cfg_.year_first);
    std::uint64_t period = 0;
    if (span > 0 && rng_.uniform() >= cfg_.same_year_fraction) period = 1 + rng_.below(span);
    r.year_first = cfg_.year_first + static_cast<Year>(rng_.below(span - period + 1));
    r.year_last = r.year_first + static_cast<Year>(period);
    const double value = std::exp(mu_ + cfg_.amount_sigma * rng_.normal());
    r.amount = Amount::from_minor_units(
        std::clamp<std::int64_t>(std::llround(value * 100.0), 1, 1'000'000'000'000LL));
    std::uint32_t tx = 1 + static_cast<std::uint32_t>(period);
    while (rng_.uniform() < 0.5 && tx < 1000) ++tx;
    r.tx_count = tx;
    return r;
  }

  bool try_connect(NodeId a, NodeId b) {
    if (a == b) return false;
    const bool upward = rank_[a] < rank_[b];
    const bool reverse = rng_.uniform() < cfg_.reverse_fraction;
    const NodeId src = upward != reverse ? a : b;
    const NodeId dst = src == a ? b : a;
    if (pairs_.contains(pair_key(src, dst))) return false;
    GeneratedRecord r = background_attributes();
    r.src = src;
    r.dst = dst;
    add(src, dst, r);
    return true;
  }

  void add(NodeId src, NodeId dst, const GeneratedRecord& r) {
    pairs_.insert(pair_key(src, dst));
    ++degree_[src];
    ++degree_[dst];
    if (inst_.block_of[src] == inst_.block_of[dst]) {
      ++intra_degree_[src];
      ++intra_degree_[dst];
    }
    inst_.records.push_back(r);
  }

  const GenConfig& cfg_;
  Rng& rng_;
  SyntheticInstance& inst_;
  const double mu_ = cfg_.amount_mu();
  std::vector<double> rank_;
  std::vector<std::uint32_t> degree_;
  std::vector<std::uint32_t> intra_degree_;
  std::vector<std::uint64_t> cumulative_;
  std::unordered_set<std::uint64_t> pairs_;
};

}  // namespace

void GenConfig::validate() const {
  if (nodes < 2) throw InputError("nodes must be >= 2");
  if (block_count < 1) throw InputError("block_count must be >= 1");
  if (nodes < block_count) throw InputError("nodes must be >= block_count");
  if (!(intra_block_edge_fraction > 0.0 && intra_block_edge_fraction <= 1.0))
    throw InputError("intra_block_edge_fraction must be in (0, 1]");
  if (!(degree_exponent > 1.0)) throw InputError("degree_exponent must be > 1");
  if (year_first > year_last) throw InputError("year range is empty");
  if (!(same_year_fraction >= 0.0 && same_year_fraction <= 1.0))
    throw InputError("same_year_fraction must be in [0, 1]");
  if (!(amount_sigma > 0.0)) throw InputError("amount_sigma must be > 0");
  if (!(above_threshold_fraction > 0.0 && above_threshold_fraction < 1.0))
    throw InputError("above_threshold_fraction must be in (0, 1)");
  if (threshold <= Amount::from_minor_units(1)) throw InputError("threshold must exceed 0.01");
  if (!(reverse_fraction >= 0.0 && reverse_fraction <= 1.0))
    throw InputError("reverse_fraction must be in [0, 1]");
  if (nodes > std::numeric_limits<NodeId>::max()) throw InputError("too many nodes");
  std::size_t planted_edges = 0;
  for (const auto& p : planted_cycles) {
    if (p.length < 3 || p.length > 10)
      throw InputError("planted cycle length " + std::to_string(p.length) + " outside [3, 10]");
    planted_edges += p.length * p.count;
  }
  if (planted_edges > target_edges)
    throw InputError("infeasible config: planted cycles need more edges than target_edges");
}

double GenConfig::amount_mu() const {
  const double log_threshold = std::log(threshold.to_double());
  return log_threshold - amount_sigma * normal_quantile(1.0 - above_threshold_fraction);
}

GenConfig GenConfig::rabobank_scale() {
  GenConfig c;
  c.nodes = 1'624'030;
  c.target_edges = 3'823'167;
  c.self_loop_records = 4'127'043 - 3'823'167;
  c.block_count = 40'600;
  // Sparse links between blocks and few rank reversals, so communities stay
  // small and background cycles number in the hundreds.
  c.intra_block_edge_fraction = 0.995;
  c.reverse_fraction = 0.001;
  c.planted_cycles = {{3, 90}, {4, 55}, {5, 20}, {6, 10}, {7, 8}};
  return c;
}

SyntheticInstance generate_instance(const GenConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SyntheticInstance inst;
  inst.truth.config = config;
  inst.records.reserve(config.target_edges + config.self_loop_records);

  Builder builder(config, rng, inst);
  builder.plant();
  const std::size_t budget = config.target_edges;
  builder.draw_degrees(budget);
  builder.match_stubs(budget);
  builder.cover(budget);
  builder.top_up(budget);
  builder.add_self_loops(config.self_loop_records);
  rng.shuffle(inst.records);
  return inst;
}

GroundTruth write_instance(const SyntheticInstance& inst, std::ostream& out) {
  Fingerprint fp;
  std::string buf;
  buf.reserve(1 << 20);
  buf.append(kEdgeCsvHeader).push_back('\n');
  auto flush = [&] {
    fp.update(buf);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };
  for (const auto& r : inst.records) {
    buf.append(inst.labels[r.src]).push_back(',');
    buf.append(inst.labels[r.dst]).push_back(',');
    buf.append(std::to_string(r.tx_count)).push_back(',');
    buf.append(r.amount.to_string()).push_back(',');
    buf.append(std::to_string(r.year_first)).push_back(',');
    buf.append(std::to_string(r.year_last)).push_back('\n');
    if (buf.size() > (1 << 20) - 256) flush();
  }
  flush();
  if (!out) throw InputError("failed writing edge CSV");
  GroundTruth truth = inst.truth;
  truth.instance_id = fp.hex();
  return truth;
}

GroundTruth generate(const GenConfig& config, std::ostream& edges_csv) {
  return write_instance(generate_instance(config), edges_csv);
}

GroundTruth generate_files(const GenConfig& config, const std::filesystem::path& edges_csv,
                           const std::filesystem::path& truth_json) {
  std::ofstream out(edges_csv, std::ios::binary);
  if (!out) throw InputError("cannot write '" + edges_csv.string() + "'");
  GroundTruth truth = generate(config, out);
  out.close();
  if (!out) throw InputError("failed writing '" + edges_csv.string() + "'");
  write_truth(truth, truth_json);
  return truth;
}

namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

ojson gen_config_json(const GenConfig& c) {
  ojson planted = ojson::array();
  for (const auto& p : c.planted_cycles) planted.push_back({{"length", p.length}, {"count", p.count}});
  return ojson{{"nodes", c.nodes},
               {"target_edges", c.target_edges},
               {"block_count", c.block_count},
               {"intra_block_edge_fraction", c.intra_block_edge_fraction},
               {"degree_exponent", c.degree_exponent},
               {"year_range", {c.year_first, c.year_last}},
               {"same_year_fraction", c.same_year_fraction},
               {"amount_sigma", c.amount_sigma},
               {"above_threshold_fraction", c.above_threshold_fraction},
               {"threshold", c.threshold.to_string()},
               {"reverse_fraction", c.reverse_fraction},
               {"self_loop_records", c.self_loop_records},
               {"planted_cycles", planted},
               {"seed", c.seed}};
}

GenConfig gen_config_from(const json& j) {
  GenConfig c;
  c.nodes = j.at("nodes").get<std::size_t>();
  c.target_edges = j.at("target_edges").get<std::size_t>();
  c.block_count = j.at("block_count").get<std::size_t>();
  c.intra_block_edge_fraction = j.at("intra_block_edge_fraction").get<double>();
  c.degree_exponent = j.at("degree_exponent").get<double>();
  c.year_first = j.at("year_range").at(0).get<Year>();
  c.year_last = j.at("year_range").at(1).get<Year>();
  c.same_year_fraction = j.at("same_year_fraction").get<double>();
  c.amount_sigma = j.at("amount_sigma").get<double>();
  c.above_threshold_fraction = j.at("above_threshold_fraction").get<double>();
  const auto threshold = Amount::parse(j.at("threshold").get<std::string>());
  if (!threshold) throw InputError("truth: bad threshold");
  c.threshold = *threshold;
  c.reverse_fraction = j.at("reverse_fraction").get<double>();
  c.self_loop_records = j.at("self_loop_records").get<std::size_t>();
  for (const auto& p : j.at("planted_cycles"))
    c.planted_cycles.push_back({p.at("length").get<std::size_t>(), p.at("count").get<std::size_t>()});
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string truth_to_json(const GroundTruth& truth) {
  ojson planted = ojson::array();
  for (const auto& p : truth.planted) {
    ojson edges = ojson::array();
    for (const auto& e : p.edges)
      edges.push_back({{"tx_count", e.tx_count}, {"amount", e.amount.to_string()}, {"year", e.year}});
    planted.push_back({{"nodes", p.nodes}, {"block", p.block}, {"edges", edges}});
  }
  ojson j{{"instance_id", truth.instance_id},
          {"seed", truth.config.seed},
          {"config", gen_config_json(truth.config)},
          {"planted", planted}};
  return j.dump(2) + "\n";
}

GroundTruth truth_from_json(std::string_view text) {
  GroundTruth truth;
  try {
    const json j = json::parse(text);
    truth.instance_id = j.at("instance_id").get<std::string>();
    truth.config = gen_config_from(j.at("config"));
    for (const auto& p : j.at("planted")) {
      PlantedCycle c;
      c.nodes = p.at("nodes").get<std::vector<std::string>>();
      c.block = p.at("block").get<std::size_t>();
      for (const auto& e : p.at("edges")) {
        const auto amount = Amount::parse(e.at("amount").get<std::string>());
        if (!amount) throw InputError("truth: bad amount");
        c.edges.push_back({e.at("tx_count").get<std::uint32_t>(), *amount, e.at("year").get<Year>()});
      }
      if (c.edges.size() != c.nodes.size()) throw InputError("truth: cycle edge count mismatch");
      truth.planted.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("truth: ") + e.what());
  }
  return truth;
}

void write_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << truth_to_json(truth);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

GroundTruth read_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return truth_from_json(buf.str());
}

}  // namespace cyclone
