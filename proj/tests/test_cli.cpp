#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "sonarr/pathstore.hpp"
#include "sonarr/synth.hpp"
#include "support.hpp"

using namespace sonarr;
using support::TempDir;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome sonarr_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sonarr");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string write_model(const TempDir& dir, const std::string& name, const Network& net) {
  const auto file = dir / name;
  std::ofstream(file) << render_network(net);
  return file.string();
}

bool has(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("durations") {
    using std::chrono::milliseconds;
    CHECK(cli::parse_duration("1500ms") == milliseconds(1500));
    CHECK(cli::parse_duration("30s") == milliseconds(30'000));
    CHECK(cli::parse_duration("30") == milliseconds(30'000));
    CHECK(cli::parse_duration("5m") == milliseconds(300'000));
    CHECK(cli::parse_duration("2h") == milliseconds(7'200'000));
    CHECK(cli::parse_duration("0.5s") == milliseconds(500));
    for (const char* bad : {"", "s", "10x", "-3s"}) {
      CAPTURE(bad);
      CHECK_THROWS_AS(cli::parse_duration(bad), std::invalid_argument);
    }
  }

  TEST_CASE("fact overrides") {
    const auto on = cli::parse_fact_override("4=true");
    CHECK(on.fact == 4);
    CHECK(on.value);
    CHECK_FALSE(cli::parse_fact_override("12=FALSE").value);
    for (const char* bad : {"4", "=true", "x=true", "4=yes", "4x=true"}) {
      CAPTURE(bad);
      CHECK_THROWS_AS(cli::parse_fact_override(bad), std::invalid_argument);
    }
  }

  TEST_CASE("run on the filter fixture") {
    TempDir dir;
    const auto model = support::fixture("filter_model.json").string();
    const auto r = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--filter",
                               "F4:T and F5:T", "--workers", "2", "--out", dir.path().string()});
    REQUIRE(r.code == 0);
    CHECK(has(r.out, "final paths:      1\n"));
    CHECK(has(r.out, "connections:      6\n"));
    CHECK(has(r.out, "rules triggered:  8\n"));
    CHECK(has(r.out, "longest chain:    6 (x1)\n"));
    CHECK(has(r.out, "stop reason:      Exhausted\n"));
    CHECK(std::filesystem::exists(merged_file(dir.path(), kFinalPathsTitle)));

    const auto fact = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--set-fact",
                                  "4=true", "--mode", "single", "--out", dir.path().string()});
    REQUIRE(fact.code == 0);
    CHECK(has(fact.out, "final paths:      1\n"));
    CHECK(has(fact.out, "connections:      2\n"));

    const auto omit = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--omit-rule",
                                  "1", "--mode", "single", "--out", dir.path().string()});
    REQUIRE(omit.code == 0);
    CHECK(has(omit.out, "final paths:      0\n"));
  }

  TEST_CASE("run errors") {
    TempDir dir;
    const auto model = support::fixture("filter_model.json").string();
    const auto unknown = sonarr_cli({"run", "--model", model, "--start", "9", "--end", "2", "--out",
                                     dir.path().string()});
    CHECK(unknown.code == 1);
    CHECK(has(unknown.err, "error:"));
    const auto both = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--mode", "single",
                                  "--workers", "2", "--out", dir.path().string()});
    CHECK(both.code == 1);
    CHECK(has(both.err, "error: --workers is not allowed with --mode single"));
    CHECK(sonarr_cli({"run", "--model", model, "--start", "1"}).code == 2);
    CHECK(sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--mode", "fast"}).code == 2);
    CHECK(sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2",
                      "--redistribution-threshold", "1"})
              .code == 2);
    const auto bad_filter = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--filter",
                                        "F4:", "--out", dir.path().string()});
    CHECK(bad_filter.code == 1);
    CHECK(sonarr_cli({}).code == 2);
  }

  TEST_CASE("max final paths") {
    TempDir dir;
    const auto model = write_model(dir, "m.json", layered(6, 3, RuleTemplate::NoLinkRetraversal).network);
    const auto r = sonarr_cli({"run", "--model", model, "--start", "0", "--end", "19", "--workers", "3",
                               "--max-final-paths", "10", "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(has(r.out, "stop reason:      MaxPaths\n"));
    const auto n = read_all_paths(dir / "out").size();
    CHECK(n >= 10);
    CHECK(n <= 13);
  }

  TEST_CASE("query prints the top rows and caches the sort file") {
    TempDir dir;
    const auto m = complete(4, RuleTemplate::NodeSimple);
    const auto model = write_model(dir, "k4.json", m.network);
    const auto out_dir = (dir / "out").string();
    REQUIRE(sonarr_cli({"run", "--model", model, "--start", "0", "--end", "3", "--workers", "2", "--out",
                        out_dir})
                .code == 0);
    std::filesystem::remove(merged_file(out_dir, sort_key_title(SortKey::Id)));
    const auto first = sonarr_cli({"query", "--out", out_dir, "--sort", "id", "-k", "3"});
    REQUIRE(first.code == 0);
    const auto rows = lines(first.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "# sort: ID (built)");
    CHECK(rows[1] == "rank\tpath_id\tconnections\tvalue");

    std::vector<Id> ids;
    for (const auto& p : read_all_paths(out_dir)) ids.push_back(p.id);
    std::sort(ids.rbegin(), ids.rend());
    for (int i = 0; i < 3; ++i) {
      CHECK(rows[2 + i].rfind(std::to_string(i + 1) + "\t" + std::to_string(ids[i]) + "\t", 0) == 0);
    }
    const auto second = sonarr_cli({"query", "--out", out_dir, "--sort", "ID", "--top", "3"});
    CHECK(lines(second.out)[0] == "# sort: ID (cached)");
    CHECK(lines(second.out).size() == 5);

    const auto none = sonarr_cli({"query", "--out", out_dir, "-k", "0"});
    CHECK(lines(none.out).size() == 2);
    const auto integrity = sonarr_cli({"query", "--out", out_dir, "--sort", "integrity", "-k", "10"});
    CHECK(lines(integrity.out).size() == 2 + 5);
    CHECK(sonarr_cli({"query", "--out", out_dir, "--sort", "speed"}).code == 1);
    CHECK(sonarr_cli({"query", "--out", (dir / "empty").string()}).code == 1);
  }

  TEST_CASE("gen writes loadable models") {
    TempDir dir;
    const auto file = (dir / "chain.json").string();
    const auto r = sonarr_cli({"gen", "--topology", "chain", "--n", "5", "--out", file});
    REQUIRE(r.code == 0);
    CHECK(has(r.out, "start 0, end 4"));
    const Network net = load_network_file(file);
    CHECK(net.containers.size() == 5);
    CHECK(net.links.size() == 4);

    const auto a = sonarr_cli({"gen", "--topology", "random", "--seed", "17"});
    const auto b = sonarr_cli({"gen", "--topology", "random", "--seed", "17"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(load_network(a.out) == random_network(17).network);
    CHECK(sonarr_cli({"gen", "--topology", "ring"}).code == 1);
    CHECK(sonarr_cli({"gen", "--topology", "chain", "--template", "odd"}).code == 1);
    CHECK(sonarr_cli({"gen", "--topology", "chain", "--n", "1"}).code == 1);
  }

  TEST_CASE("compare reports matching path sets") {
    TempDir dir;
    const auto model = write_model(dir, "m.json", layered(4, 3, RuleTemplate::NoLinkRetraversal).network);
    const auto r = sonarr_cli({"compare", "--model", model, "--start", "0", "--end", "13", "--workers", "3",
                               "--out", (dir / "cmp").string()});
    CHECK(r.code == 0);
    CHECK(has(r.out, "single\t1\t64\t"));
    CHECK(has(r.out, "multi\t3\t64\t"));
    CHECK(has(r.out, "verdict: PASS\n"));
  }

  TEST_CASE("validate") {
    TempDir dir;
    CHECK(sonarr_cli({"validate", "--model", support::fixture("filter_model.json").string()}).out == "OK\n");
    Network bad = support::filter_model();
    bad.links[1].endpoint_b = 9;
    const auto r = sonarr_cli({"validate", "--model", write_model(dir, "bad.json", bad)});
    CHECK(r.code == 1);
    CHECK(has(r.out, "link 2: endpoint references unknown container 9"));
    std::ofstream(dir / "junk.json") << "{ not json";
    const auto junk = sonarr_cli({"validate", "--model", (dir / "junk.json").string()});
    CHECK(junk.code == 1);
    CHECK(has(junk.err, "error:"));
    const auto invalid_run = sonarr_cli({"run", "--model", (dir / "bad.json").string(), "--start", "1",
                                         "--end", "2", "--out", (dir / "o").string()});
    CHECK(invalid_run.code == 1);
    CHECK(has(invalid_run.err, "error: model is invalid\n"));
  }

  TEST_CASE("export-dot") {
    TempDir dir;
    const auto model = support::fixture("filter_model.json").string();
    const auto r = sonarr_cli({"export-dot", "--model", model});
    CHECK(r.code == 0);
    CHECK(r.out == export_dot(support::filter_model()));
    const auto file = (dir / "g.dot").string();
    CHECK(sonarr_cli({"export-dot", "--model", model, "--out", file}).code == 0);
    std::ifstream in(file);
    CHECK(std::string(std::istreambuf_iterator<char>(in), {}) == r.out);
  }

  TEST_CASE("SONARR_OUT sets the default output directory") {
    TempDir dir;
    const auto target = dir / "from-env";
    ::setenv("SONARR_OUT", target.c_str(), 1);
    const auto model = support::fixture("filter_model.json").string();
    const auto r = sonarr_cli({"run", "--model", model, "--start", "1", "--end", "2", "--mode", "single"});
    const auto q = sonarr_cli({"query", "-k", "1"});
    ::unsetenv("SONARR_OUT");
    REQUIRE(r.code == 0);
    CHECK(has(r.out, "output:           " + target.string()));
    CHECK(std::filesystem::exists(merged_file(target, kFinalPathsTitle)));
    CHECK(q.code == 0);
    CHECK(lines(q.out).size() == 3);
  }
}
