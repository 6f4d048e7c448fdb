#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cyclone/community.hpp"
#include "cyclone/error.hpp"
#include "cyclone/filters.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cyclone;
using testing::int_graph;

namespace {

using Arcs = std::vector<std::tuple<NodeId, NodeId, std::int64_t>>;

Arcs two_triangles() {
  return {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}, {3, 4, 1}, {4, 5, 1}, {5, 3, 1}};
}

Arcs barbell() {
  Arcs arcs;
  for (NodeId base : {0u, 5u})
    for (NodeId i = 0; i < 5; ++i)
      for (NodeId j = i + 1; j < 5; ++j) arcs.emplace_back(base + i, base + j, 1);
  arcs.emplace_back(4, 5, 1);
  return arcs;
}

std::vector<oracle::WeightedArc> oracle_arcs(const Arcs& arcs) {
  std::vector<oracle::WeightedArc> out;
  for (const auto& [s, d, w] : arcs) out.push_back({s, d, static_cast<double>(w)});
  return out;
}

std::vector<std::size_t> as_sizes(const Partition& p) {
  return {p.assignment().begin(), p.assignment().end()};
}

/// Same grouping regardless of label values.
bool same_grouping(std::span<const CommunityId> a, std::span<const CommunityId> b) {
  if (a.size() != b.size()) return false;
  std::map<CommunityId, CommunityId> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, nx] = ab.emplace(a[i], b[i]);
    auto [y, ny] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

Arcs random_arcs(std::size_t n, double p, std::mt19937_64& rng, std::int64_t max_weight) {
  Arcs arcs;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (i != j && u(rng) < p) arcs.emplace_back(i, j, 1 + static_cast<std::int64_t>(rng() % max_weight));
  return arcs;
}

}  // namespace

TEST_CASE("modularity view folds directions") {
  SUBCASE("single edge") {
    const auto v = build_modularity_view(int_graph(2, {{0, 1, 5}}), WeightMode::amount);
    CHECK(v.weight(0, 1) == 5);
    CHECK(v.weight(1, 0) == 5);
    CHECK(v.strength(0) == 5);
    CHECK(v.strength(1) == 5);
    CHECK(v.total_weight() == 5);
  }
  SUBCASE("opposite directions sum") {
    const auto v = build_modularity_view(int_graph(2, {{0, 1, 3}, {1, 0, 4}}), WeightMode::amount);
    CHECK(v.weight(0, 1) == 7);
    CHECK(v.total_weight() == 7);
    REQUIRE(v.neighbors(0).size() == 1);
  }
  SUBCASE("unweighted two triangles") {
    const auto v = build_modularity_view(int_graph(6, two_triangles()), WeightMode::unweighted);
    for (NodeId i = 0; i < 6; ++i)
      for (NodeId j = 0; j < 6; ++j) CHECK((v.weight(i, j) == 0 || v.weight(i, j) == 1));
    CHECK(v.total_weight() == 6);
  }
  SUBCASE("count mode uses tx_count") {
    const auto g = testing::labeled_graph({"a", "b"}, {testing::arc("a", "b", 999, 2015, 2015, 4)});
    CHECK(build_modularity_view(g, WeightMode::tx_count).total_weight() == 4);
    CHECK(build_modularity_view(g, WeightMode::amount).total_weight() == 999);
  }
  SUBCASE("zero total weight") {
    CHECK_THROWS_AS(build_modularity_view(int_graph(2, {{0, 1, 0}}), WeightMode::amount), ModularityUndefined);
    CHECK_THROWS_AS(build_modularity_view(int_graph(3, {}), WeightMode::unweighted), ModularityUndefined);
  }
}

TEST_CASE("weight mode names") {
  CHECK(to_string(WeightMode::tx_count) == "count");
  CHECK(parse_weight_mode("count") == WeightMode::tx_count);
  CHECK(parse_weight_mode("tx_count") == WeightMode::tx_count);
  CHECK(parse_weight_mode("unweighted") == WeightMode::unweighted);
  CHECK_FALSE(parse_weight_mode("pagerank"));
}

TEST_CASE("partition relabels by first appearance") {
  const Partition p({7, 7, 2, 9, 2});
  CHECK(p.community_count() == 3);
  CHECK(std::vector<CommunityId>(p.assignment().begin(), p.assignment().end()) ==
        std::vector<CommunityId>{0, 0, 1, 2, 1});
  CHECK(p.sizes() == std::vector<std::size_t>{2, 2, 1});
  CHECK(p.members()[1] == std::vector<NodeId>{2, 4});
}

TEST_CASE("modularity on small exact cases") {
  const auto v = build_modularity_view(int_graph(6, two_triangles()), WeightMode::unweighted);
  CHECK(modularity(v, Partition({0, 0, 0, 1, 1, 1})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(modularity(v, Partition({0, 0, 0, 1, 1, 1})) - 0.5) < 1e-12);
  CHECK(std::abs(modularity(v, Partition::singletons(6)) - (-1.0 / 6.0)) < 1e-12);
  CHECK(std::abs(modularity(v, Partition({0, 0, 0, 0, 0, 0}))) < 1e-15);
  CHECK_THROWS_AS(modularity(v, Partition::singletons(5)), InputError);
}

TEST_CASE("one community always gives zero") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto arcs = random_arcs(20, 0.2, rng, 1000);
    if (arcs.empty()) continue;
    const auto v = build_modularity_view(int_graph(20, arcs), WeightMode::amount);
    CHECK(std::abs(modularity(v, Partition(std::vector<CommunityId>(20, 0)))) < 1e-12);
  }
}

TEST_CASE("modularity matches the double-loop oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng() % 80;
    const auto arcs = random_arcs(n, 0.05 + 0.3 * static_cast<double>(rng() % 100) / 100.0, rng, 1'000'000);
    if (arcs.empty()) continue;
    std::vector<CommunityId> labels(n);
    const std::size_t k = 1 + rng() % n;
    for (auto& c : labels) c = static_cast<CommunityId>(rng() % k);
    const Partition p(labels);
    const auto v = build_modularity_view(int_graph(n, arcs), WeightMode::amount);
    const auto a = oracle::symmetric_matrix(n, oracle_arcs(arcs));
    CHECK(std::abs(modularity(v, p) - static_cast<double>(oracle::modularity(a, as_sizes(p)))) < 1e-9);
  }
}

TEST_CASE("partition enumeration oracle counts Bell numbers") {
  std::size_t count = 0;
  oracle::for_each_partition(6, [&](const std::vector<std::size_t>&) { ++count; });
  CHECK(count == 203);
  count = 0;
  oracle::for_each_partition(10, [&](const std::vector<std::size_t>&) { ++count; });
  CHECK(count == 115'975);
}

TEST_CASE("louvain on two triangles finds the triangles") {
  const auto g = int_graph(6, two_triangles());
  LouvainConfig cfg;
  cfg.weight_mode = WeightMode::unweighted;
  const auto r = louvain(g, cfg);
  CHECK(r.partition.community_count() == 2);
  CHECK(same_grouping(r.partition.assignment(), std::vector<CommunityId>{0, 0, 0, 1, 1, 1}));
  CHECK(std::abs(r.modularity - 0.5) < 1e-12);
  const auto best = oracle::best_partition(oracle::symmetric_matrix(6, oracle_arcs(two_triangles())));
  CHECK(best.partitions_seen == 203);
  CHECK(std::abs(r.modularity - static_cast<double>(best.q)) < 1e-12);
}

TEST_CASE("louvain on a barbell finds the cliques") {
  const auto g = int_graph(10, barbell());
  LouvainConfig cfg;
  cfg.weight_mode = WeightMode::unweighted;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto r = louvain(g, cfg);
    CHECK(same_grouping(r.partition.assignment(), std::vector<CommunityId>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  }
}

TEST_CASE("isolated nodes stay singletons") {
  const auto g = int_graph(7, two_triangles());
  LouvainConfig cfg;
  cfg.weight_mode = WeightMode::unweighted;
  const auto r = louvain(g, cfg);
  CHECK(r.partition.community_count() == 3);
  CHECK(r.partition.sizes()[r.partition[6]] == 1);
}

TEST_CASE("louvain invariants on random graphs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + rng() % 120;
    const auto arcs = random_arcs(n, 3.0 / static_cast<double>(n), rng, 100'000);
    if (arcs.empty()) continue;
    const auto g = int_graph(n, arcs);
    LouvainConfig cfg;
    cfg.seed = rng();
    cfg.weight_mode = static_cast<WeightMode>(trial % 3);
    const auto view = build_modularity_view(g, cfg.weight_mode);
    const auto r = louvain(view, cfg);
    REQUIRE(!r.level_objective.empty());
    CHECK(std::abs(r.level_objective.back() - r.modularity) < 1e-9);
    CHECK(std::abs(r.modularity - modularity(view, r.partition)) < 1e-12);
    CHECK(std::abs(r.level_objective.front() - modularity(view, Partition::singletons(n))) < 1e-12);
    for (std::size_t i = 1; i < r.level_objective.size(); ++i)
      CHECK(r.level_objective[i] >= r.level_objective[i - 1]);
    CHECK(r.modularity >= -0.5);
    CHECK(r.modularity < 1.0);
    CHECK(louvain(view, cfg).partition == r.partition);
  }
}

TEST_CASE("relabeling nodes with a matching base order gives the same grouping") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 6 + rng() % 60;
    const auto arcs = random_arcs(n, 4.0 / static_cast<double>(n), rng, trial % 2 ? 1 : 5000);
    if (arcs.empty()) continue;
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    Arcs permuted;
    for (const auto& [s, d, w] : arcs) permuted.emplace_back(perm[s], perm[d], w);

    LouvainConfig cfg;
    cfg.seed = rng();
    const auto a = louvain(int_graph(n, arcs), cfg);
    cfg.base_order = perm;  // position i visits the image of node i
    const auto b = louvain(int_graph(n, permuted), cfg);

    std::vector<CommunityId> pulled(n);
    for (NodeId v = 0; v < n; ++v) pulled[v] = b.partition[perm[v]];
    CHECK(same_grouping(a.partition.assignment(), pulled));
    CHECK(std::abs(a.modularity - b.modularity) < 1e-12);
  }
}

TEST_CASE("resolution other than one") {
  const auto g = int_graph(10, barbell());
  LouvainConfig cfg;
  cfg.weight_mode = WeightMode::unweighted;
  cfg.resolution = 0.01;
  CHECK(louvain(g, cfg).partition.community_count() == 1);
  cfg.resolution = 1.5;
  const auto r = louvain(g, cfg);
  CHECK(r.partition.community_count() >= 2);
  for (std::size_t i = 1; i < r.level_objective.size(); ++i)
    CHECK(r.level_objective[i] >= r.level_objective[i - 1]);
}

TEST_CASE("louvain config validation") {
  LouvainConfig cfg;
  cfg.resolution = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.gain_tolerance = -1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.base_order = {0, 0};
  CHECK_THROWS_AS(louvain(int_graph(2, {{0, 1, 1}}), cfg), InputError);
}

TEST_CASE("partition dump") {
  testing::TempDir dir;
  const auto g = int_graph(6, two_triangles());
  write_partition(g, Partition({0, 0, 0, 1, 1, 1}), dir / "p.csv");
  CHECK(testing::read_file(dir / "p.csv") == "node_label,community_id\n0,0\n1,0\n2,0\n3,1\n4,1\n5,1\n");
}
