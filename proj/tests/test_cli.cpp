#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "cyclone/report.hpp"
#include "support.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(const testing::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" + CYCLONE_BIN + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::read_file(out);
  r.err = testing::read_file(err);
  return r;
}

const char* kTriangle =
    "src,dst,tx_count,amount,year_first,year_last\n"
    "a,b,1,100.00,2015,2015\n"
    "b,c,1,100.00,2015,2015\n"
    "c,a,1,100.00,2015,2015\n"
    "c,c,1,5.00,2015,2015\n";

const char* kGen = "gen --nodes 2000 --edges 5000 --blocks 50 --plant 3:4 --plant 4:4 --seed 2 --out g.csv";

}  // namespace

TEST_CASE("gen writes edges and truth") {
  testing::TempDir dir;
  const auto r = run_cli(dir, std::string(kGen) + " --json");
  REQUIRE(r.code == 0);
  const auto summary = json::parse(r.out);
  CHECK(summary["planted_cycles"] == 8);
  CHECK(summary["edges"] == 5000);
  const auto truth = json::parse(testing::read_file(dir / "g.csv.truth.json"));
  CHECK(truth["planted"].size() == 8);
  CHECK(truth["instance_id"] == summary["instance_id"]);
}

TEST_CASE("same seed gives the same bytes") {
  testing::TempDir dir;
  REQUIRE(run_cli(dir, kGen).code == 0);
  const auto first = testing::read_file(dir / "g.csv");
  REQUIRE(run_cli(dir, kGen).code == 0);
  CHECK(testing::read_file(dir / "g.csv") == first);
  REQUIRE(run_cli(dir, "gen --nodes 2000 --edges 5000 --blocks 50 --plant 3:4 --seed 3 --out g.csv").code == 0);
  CHECK(testing::read_file(dir / "g.csv") != first);
}

TEST_CASE("stats counts self-loops") {
  testing::TempDir dir;
  testing::write_file(dir / "tri.csv", kTriangle);
  const auto r = run_cli(dir, "stats --input tri.csv --json");
  REQUIRE(r.code == 0);
  const auto s = json::parse(r.out);
  CHECK(s["self_loops_dropped"] == 1);
  CHECK(s["final_edge_count"] == 3);
  CHECK(s["records_read"] == 4);
}

TEST_CASE("detect on a triangle") {
  testing::TempDir dir;
  testing::write_file(dir / "tri.csv", kTriangle);
  const auto r = run_cli(dir, "detect --input tri.csv --out report.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("cycles_found                1") != std::string::npos);
  CHECK(r.err.find("[cyclone] louvain") != std::string::npos);
  const auto report = cyclone::report_from_json(testing::read_file(dir / "report.json"));
  REQUIRE(report.cycles.size() == 1);
  CHECK(report.funnel.self_loops_dropped == 1);
  CHECK(cyclone::report_integrity_errors(report).empty());

  const auto quiet = run_cli(dir, "detect --input tri.csv --out report.json --quiet");
  CHECK(quiet.err.empty());
}

TEST_CASE("input errors exit with code 2") {
  testing::TempDir dir;
  const auto missing = run_cli(dir, "detect --input nope.csv");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cyclone:") != std::string::npos);
  testing::write_file(dir / "tri.csv", kTriangle);
  CHECK(run_cli(dir, "detect --input tri.csv --min-cycle-len 1").code == 2);
  CHECK(run_cli(dir, "detect --input tri.csv --amount-threshold abc").code == 2);
  CHECK(run_cli(dir, "bogus").code == 2);
  CHECK(run_cli(dir, "detect").code == 2);
}

TEST_CASE("explicit defaults match a bare run") {
  testing::TempDir dir;
  REQUIRE(run_cli(dir, kGen).code == 0);
  REQUIRE(run_cli(dir, "detect --input g.csv --out bare.json --quiet").code == 0);
  REQUIRE(run_cli(dir,
                  "detect --input g.csv --out explicit.json --quiet --t0-years 1 --amount-threshold 10000 "
                  "--min-community-order 3 --min-cycle-len 3 --max-cycle-len 10 --weight-mode amount "
                  "--resolution 1 --seed 0")
              .code == 0);
  CHECK(testing::read_file(dir / "bare.json") == testing::read_file(dir / "explicit.json"));
}

TEST_CASE("help lists defaults") {
  testing::TempDir dir;
  const auto r = run_cli(dir, "detect --help");
  CHECK(r.code == 0);
  CHECK(r.out.find("[10000.00]") != std::string::npos);
  CHECK(r.out.find("--t0-years INT [1]") != std::string::npos);
  CHECK(r.out.find("CYCLONE_THREADS") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  testing::TempDir dir;
  testing::write_file(dir / "tri.csv", kTriangle);
  testing::write_file(dir / "cfg.json", R"({"min_community_order": 4, "amount_threshold": "50.00"})");
  REQUIRE(run_cli(dir, "detect --input tri.csv --config cfg.json --out a.json --quiet").code == 0);
  const auto a = cyclone::report_from_json(testing::read_file(dir / "a.json"));
  CHECK(a.config.filter.min_community_order == 4);
  CHECK(a.cycles.empty());
  REQUIRE(run_cli(dir, "detect --input tri.csv --config cfg.json --min-community-order 3 --out b.json --quiet").code ==
          0);
  const auto b = cyclone::report_from_json(testing::read_file(dir / "b.json"));
  CHECK(b.config.filter.min_community_order == 3);
  CHECK(b.config.filter.amount_threshold == cyclone::Amount::from_major_units(50));
  CHECK(b.funnel.edges_amount_pass == 0);
}

TEST_CASE("thread count from the environment does not change the report") {
  testing::TempDir dir;
  REQUIRE(run_cli(dir, kGen).code == 0);
  REQUIRE(run_cli(dir, "detect --input g.csv --out one.json --quiet", "CYCLONE_THREADS=1").code == 0);
  REQUIRE(run_cli(dir, "detect --input g.csv --out four.json --quiet", "CYCLONE_THREADS=4").code == 0);
  CHECK(testing::read_file(dir / "one.json") == testing::read_file(dir / "four.json"));
  CHECK(run_cli(dir, "detect --input g.csv --quiet", "CYCLONE_THREADS=x").code == 2);
}

TEST_CASE("csv bundle and partition outputs") {
  testing::TempDir dir;
  testing::write_file(dir / "tri.csv", kTriangle);
  REQUIRE(run_cli(dir, "detect --input tri.csv --format csv --out bundle --partition-out part.csv --quiet").code == 0);
  CHECK(testing::read_file(dir / "part.csv").rfind("node_label,community_id\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "bundle"));
  const auto c = run_cli(dir, "communities --input tri.csv --out comm.csv --quiet");
  CHECK(c.code == 0);
  CHECK(testing::read_file(dir / "comm.csv") == testing::read_file(dir / "part.csv"));
}

TEST_CASE("cycles subcommand") {
  testing::TempDir dir;
  testing::write_file(dir / "tri.csv", kTriangle);
  const auto r = run_cli(dir, "cycles --input tri.csv --json");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"a\"") != std::string::npos);
}

TEST_CASE("score a detection run") {
  testing::TempDir dir;
  REQUIRE(run_cli(dir, kGen).code == 0);
  REQUIRE(run_cli(dir, "detect --input g.csv --out r.json --partition-out p.csv --quiet").code == 0);
  const auto r = run_cli(dir, "score --report r.json --truth g.csv.truth.json --partition p.csv --json");
  REQUIRE(r.code == 0);
  const auto s = json::parse(r.out);
  CHECK(s["planted"] == 8);
  CHECK(s["attribute_mismatches"] == 0);
  CHECK(s["intact_found"] == s["planted_intact"]);
  CHECK(run_cli(dir, "score --report r.json").code == 2);
}
