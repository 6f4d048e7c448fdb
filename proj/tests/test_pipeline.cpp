#include <doctest.h>

#include <set>
#include <sstream>

#include "cyclone/error.hpp"
#include "cyclone/pipeline.hpp"
#include "cyclone/report.hpp"
#include "cyclone/synthgen.hpp"
#include "support.hpp"

using namespace cyclone;
using testing::arc;
using testing::labeled_graph;

namespace {

CycleRecord cycle_of(std::vector<std::string> nodes) {
  CycleRecord c;
  c.nodes = std::move(nodes);
  return c;
}

/// Two triangles joined by one heavy-but-above-threshold edge, plus a
/// pair that forms a community of order 2.
TransactionGraph small_world() {
  return labeled_graph({"a", "b", "c", "d", "e", "f", "x", "y"},
                       {arc("a", "b"), arc("b", "c"), arc("c", "a"), arc("d", "e"), arc("e", "f"),
                        arc("f", "d", 100'00, 2014, 2015), arc("c", "d", 2'000'000'00), arc("x", "y"),
                        arc("y", "x")});
}

}  // namespace

TEST_CASE("flagged accounts") {
  CHECK(flagged_accounts({}).empty());
  const std::vector<CycleRecord> disjoint{cycle_of({"a", "b", "c"}), cycle_of({"d", "e", "f"})};
  CHECK(flagged_accounts(disjoint).size() == 6);
  const std::vector<CycleRecord> shared{cycle_of({"a", "b", "c"}), cycle_of({"c", "d", "e"})};
  CHECK(flagged_accounts(shared) == std::vector<std::string>{"a", "b", "c", "d", "e"});
}

TEST_CASE("histogram") {
  CHECK(histogram({}).empty());
  const std::vector<CycleRecord> cycles{cycle_of({"a", "b", "c"}), cycle_of({"d", "e", "f"}),
                                        cycle_of({"a", "b", "c", "d"})};
  CHECK(histogram(cycles) == CycleHistogram{{3, 2}, {4, 1}});
}

TEST_CASE("empty graph has no usable edges") {
  const auto g = labeled_graph({"a", "b"}, {});
  CHECK_THROWS_WITH_AS(run_pipeline(g, {}), "graph has no usable edges", InputError);
  CHECK_THROWS_WITH_AS(run_pipeline(TransactionGraph{}, {}), "graph has no usable edges", InputError);
}

TEST_CASE("triangle dataset") {
  const auto g = labeled_graph({"a", "b", "c"}, {arc("a", "b"), arc("b", "c"), arc("c", "a")});
  const auto r = run_pipeline(g, {});
  REQUIRE(r.cycles.size() == 1);
  CHECK(r.cycles[0].nodes == std::vector<std::string>{"a", "b", "c"});
  CHECK(r.cycles[0].edges.size() == 3);
  CHECK(r.cycles[0].edges[0].src == "a");
  CHECK(r.cycles[0].edges[0].dst == "b");
  CHECK(r.funnel.cycles_found == 1);
  CHECK(r.funnel.accounts_flagged == 3);
  CHECK(r.funnel.communities_kept == 1);
  CHECK(r.flagged_accounts == std::vector<std::string>{"a", "b", "c"});
  CHECK(report_integrity_errors(r).empty());
}

TEST_CASE("funnel on a small world") {
  const auto g = small_world();
  PipelineConfig cfg;
  cfg.louvain.weight_mode = WeightMode::unweighted;
  Partition seen;
  PipelineOptions opts;
  std::vector<std::string> stages;
  opts.on_partition = [&](const Partition& p) { seen = p; };
  opts.on_stage = [&](const StageTiming& t) { stages.push_back(t.stage); };
  const auto r = run_pipeline(g, cfg, opts);
  CHECK(seen.node_count() == g.node_count());
  CHECK_FALSE(stages.empty());

  CHECK(r.funnel.nodes == 8);
  CHECK(r.funnel.edges_input == 9);
  CHECK(r.funnel.communities_total == 3);
  CHECK(r.funnel.communities_kept == 2);
  CHECK(r.sizes_all.count == 3);
  CHECK(r.sizes_all.max == 3);
  CHECK(r.sizes_kept.count == 2);
  CHECK(r.sizes_kept.mean == doctest::Approx(3.0));
  // The bridge crosses communities; x<->y sits in a dropped community.
  CHECK(r.funnel.edges_in_kept_communities == 6);
  CHECK(r.funnel.edges_time_pass == 5);
  CHECK(r.funnel.edges_amount_pass == 5);
  REQUIRE(r.cycles.size() == 1);
  CHECK(r.cycles[0].nodes == std::vector<std::string>{"a", "b", "c"});
  CHECK(report_integrity_errors(r).empty());
  CHECK(cycle_validation_errors(r, g, seen).empty());
}

TEST_CASE("integrity checks catch tampering") {
  const auto g = labeled_graph({"a", "b", "c"}, {arc("a", "b"), arc("b", "c"), arc("c", "a")});
  Partition p;
  PipelineOptions opts;
  opts.on_partition = [&](const Partition& q) { p = q; };
  const auto clean = run_pipeline(g, {}, opts);

  auto bad = clean;
  bad.flagged_accounts.push_back("zz");
  CHECK_FALSE(report_integrity_errors(bad).empty());
  bad = clean;
  bad.histogram[3] = 2;
  CHECK_FALSE(report_integrity_errors(bad).empty());
  bad = clean;
  bad.funnel.edges_time_pass = bad.funnel.edges_in_kept_communities + 1;
  CHECK_FALSE(report_integrity_errors(bad).empty());
  bad = clean;
  bad.cycles[0].edges[1].amount = Amount::from_major_units(20'000);
  CHECK_FALSE(cycle_validation_errors(bad, g, p).empty());
  bad = clean;
  bad.cycles[0].edges[2].dst = "b";
  CHECK_FALSE(cycle_validation_errors(bad, g, p).empty());
}

TEST_CASE("planted cycles kept together are all found") {
  GenConfig gen;
  gen.nodes = 3000;
  gen.target_edges = 7500;
  gen.block_count = 75;
  gen.planted_cycles = {{3, 4}, {4, 3}, {5, 2}, {7, 1}};
  gen.seed = 12;
  const auto inst = generate_instance(gen);
  std::ostringstream csv;
  const auto truth = write_instance(inst, csv);

  testing::TempDir dir;
  testing::write_file(dir / "edges.csv", csv.str());
  const auto run = detect_file(dir / "edges.csv", {});
  const auto& report = run.report;
  CHECK(report.input_fingerprint == truth.instance_id);
  CHECK(report_integrity_errors(report).empty());
  CHECK(cycle_validation_errors(report, run.ingest.graph, run.partition).empty());

  const auto membership = CommunityMembership::from_partition(run.ingest.graph, run.partition);
  const auto score = score_detection(report, truth, &membership);
  CHECK(score.planted == 10);
  CHECK(score.intact_found == score.planted_intact);
  CHECK(score.attribute_mismatches == 0);
}

TEST_CASE("serial and parallel runs give the same report") {
  GenConfig gen;
  gen.nodes = 20'000;
  gen.target_edges = 50'000;
  gen.block_count = 500;
  gen.planted_cycles = {{3, 5}, {5, 5}};
  gen.seed = 3;
  std::ostringstream csv;
  generate(gen, csv);
  testing::TempDir dir;
  testing::write_file(dir / "edges.csv", csv.str());

  PipelineConfig cfg;
  cfg.parallelism = 1;
  const auto serial = detect_file(dir / "edges.csv", cfg).report;
  for (unsigned threads : {2u, 4u, 7u}) {
    cfg.parallelism = threads;
    const auto parallel = detect_file(dir / "edges.csv", cfg).report;
    CHECK(parallel == serial);
    CHECK(report_to_json(parallel) == report_to_json(serial));
  }
  CHECK(serial.funnel.cycles_found > 0);
}

TEST_CASE("cycle ids are dense and ordered by community") {
  GenConfig gen;
  gen.nodes = 5000;
  gen.target_edges = 12'500;
  gen.block_count = 125;
  gen.planted_cycles = {{3, 6}, {4, 6}};
  gen.seed = 9;
  std::ostringstream csv;
  generate(gen, csv);
  testing::TempDir dir;
  testing::write_file(dir / "edges.csv", csv.str());
  const auto r = detect_file(dir / "edges.csv", {}).report;
  for (std::size_t i = 0; i < r.cycles.size(); ++i) {
    CHECK(r.cycles[i].cycle_id == i);
    if (i > 0) CHECK(r.cycles[i - 1].community_id <= r.cycles[i].community_id);
  }
}

TEST_CASE("config validation happens before any work") {
  PipelineConfig cfg;
  cfg.cycle.min_len = 1;
  const auto g = labeled_graph({"a", "b", "c"}, {arc("a", "b"), arc("b", "c"), arc("c", "a")});
  CHECK_THROWS_AS(run_pipeline(g, cfg), InputError);
}
