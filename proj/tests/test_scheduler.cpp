#include <doctest.h>

#include <fstream>
#include <thread>

#include "sonarr/scheduler.hpp"
#include "sonarr/summary.hpp"
#include "sonarr/synth.hpp"
#include "support.hpp"

using namespace sonarr;
using support::TempDir;

namespace {

std::vector<RealityPath> numbered(int n) {
  std::vector<RealityPath> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].id = i;
  return out;
}

EngineConfig engine(const SyntheticModel& m, std::uint32_t workers) {
  EngineConfig c;
  c.worker_count = workers;
  c.traversal.start = m.start;
  c.traversal.end = m.end;
  return c;
}

std::size_t result_files(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".tmp" || e.path().filename() == kSummaryFileName) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("worker planning") {
    CHECK(plan_workers(0) == 1);
    CHECK(plan_workers(1) == 1);
    CHECK(plan_workers(2) == 1);
    CHECK(plan_workers(8) == 7);
    CHECK(default_worker_count() >= 1);
  }

  TEST_CASE("redistribution hands the bottom half to the lowest idle worker") {
    Coordinator coord(2, 10);
    coord.seed(0, RealityPath{});
    CHECK(coord.status(0) == WorkerStatus::Working);
    CHECK(coord.status(1) == WorkerStatus::Idle);

    auto stack = numbered(10);
    CHECK(coord.redistribute(0, stack) == 5);
    REQUIRE(stack.size() == 5);
    CHECK(stack.front().id == 5);
    CHECK(coord.pending(1) == 5);
    CHECK(coord.status(1) == WorkerStatus::Working);
    CHECK(coord.stats().transfers == 1);
    CHECK(coord.stats().paths_transferred == 5);

    // Nobody is idle now.
    auto more = numbered(12);
    CHECK(coord.redistribute(0, more) == 0);
    CHECK(more.size() == 12);
  }

  TEST_CASE("small stacks are kept") {
    Coordinator coord(2, 10);
    coord.seed(0, RealityPath{});
    auto stack = numbered(3);
    CHECK(coord.redistribute(0, stack) == 0);
    auto nine = numbered(9);
    CHECK(coord.redistribute(0, nine) == 0);
    auto odd = numbered(11);
    CHECK(coord.redistribute(0, odd) == 5);
    CHECK(odd.size() == 6);
  }

  TEST_CASE("target choice skips busy workers") {
    Coordinator coord(4, 2);
    coord.seed(0, RealityPath{});
    coord.seed(2, RealityPath{});
    auto stack = numbered(8);
    CHECK(coord.redistribute(0, stack) == 4);
    CHECK(coord.pending(1) == 4);
    CHECK(coord.redistribute(0, stack) == 2);
    CHECK(coord.pending(3) == 2);
    CHECK(coord.pending(2) == 1);
  }

  TEST_CASE("termination when every worker is idle") {
    Coordinator coord(3, 10);
    coord.seed(0, RealityPath{});
    CHECK_FALSE(coord.detect_termination());
    std::vector<std::thread> idle;
    std::atomic<int> woke{0};
    for (std::size_t w : {1u, 2u}) {
      idle.emplace_back([&, w] {
        std::vector<RealityPath> s;
        if (!coord.wait_for_work(w, s)) ++woke;
      });
    }
    std::vector<RealityPath> stack;
    REQUIRE(coord.wait_for_work(0, stack));
    CHECK(stack.size() == 1);
    stack.clear();
    CHECK_FALSE(coord.wait_for_work(0, stack));
    for (auto& t : idle) t.join();
    CHECK(woke == 2);
    CHECK(coord.terminated());
    CHECK(coord.detect_termination());
  }

  TEST_CASE("stop wakes waiting workers") {
    Coordinator coord(2, 10);
    coord.seed(0, RealityPath{});
    std::thread waiter([&] {
      std::vector<RealityPath> s;
      CHECK_FALSE(coord.wait_for_work(1, s));
    });
    coord.request_stop();
    waiter.join();
    CHECK(coord.stop_requested());
  }

  TEST_CASE("path sets agree across worker counts") {
    const auto m = layered(10, 4, RuleTemplate::NoLinkRetraversal, 3);
    const IndexedNetwork net(m.network);
    RunSummary base_summary;
    const auto base = canonical_path_set(support::collect(net, support::route(m.start, m.end), &base_summary));
    REQUIRE(base.size() == 10000);
    for (std::uint32_t workers : {1u, 2u, 4u, 8u}) {
      CAPTURE(workers);
      TempDir dir;
      auto config = engine(m, workers);
      config.redistribution_threshold = 4;
      const auto r = multi_threaded_search(net, config, dir.path());
      CHECK(r.summary.total_final_paths == base_summary.total_final_paths);
      CHECK(r.summary.total_connections == base_summary.total_connections);
      CHECK(r.summary.total_rules_triggered == base_summary.total_rules_triggered);
      CHECK(r.summary.longest_chain == base_summary.longest_chain);
      CHECK(r.summary.stop_reason == StopReason::Exhausted);
      CHECK(r.offsets.size() == workers);
      std::uint64_t expanded = 0;
      for (auto e : r.worker_expansions) expanded += e;
      CHECK(expanded == base_summary.expansions);
      CHECK(canonical_path_set(read_all_paths(dir.path())) == base);
      CHECK(read_run_summary(dir.path()) == r.summary);
    }
  }

  TEST_CASE("single-worker files match the multi-worker layout") {
    const auto m = complete(4, RuleTemplate::NodeSimple);
    const IndexedNetwork net(m.network);
    TempDir a, b;
    const auto single = single_threaded_to_files(net, engine(m, 1), a.path());
    const auto multi = multi_threaded_search(net, engine(m, 1), b.path());
    CHECK(single.summary.total_final_paths == 5);
    CHECK(canonical_path_set(read_all_paths(a.path())) == canonical_path_set(read_all_paths(b.path())));
    CHECK(std::filesystem::exists(merged_file(a.path(), kIndexTitle)));
    CHECK(std::filesystem::exists(worker_file(a.path(), sort_key_title(SortKey::Integrity), 0)));
  }

  TEST_CASE("filter model under several worker counts") {
    const IndexedNetwork net(support::filter_model());
    for (std::uint32_t workers : {1u, 3u}) {
      TempDir dir;
      EngineConfig c;
      c.worker_count = workers;
      c.redistribution_threshold = 2;
      c.traversal = support::route(1, 2);
      c.traversal.completion_filter = parse_filter("F4:T and F5:T");
      const auto r = multi_threaded_search(net, c, dir.path());
      CHECK(r.summary.total_final_paths == 1);
      CHECK(r.summary.total_connections == 6);
      CHECK(r.summary.total_rules_triggered == 8);
    }
  }

  TEST_CASE("max final paths overshoots by at most one per worker") {
    const auto m = layered(10, 4, RuleTemplate::NoLinkRetraversal);
    const IndexedNetwork net(m.network);
    for (std::uint32_t workers : {1u, 4u}) {
      TempDir dir;
      auto c = engine(m, workers);
      c.traversal.stop_max_final_paths = 50;
      const auto r = multi_threaded_search(net, c, dir.path());
      CHECK(r.summary.stop_reason == StopReason::MaxPaths);
      CHECK(r.summary.total_final_paths >= 50);
      CHECK(r.summary.total_final_paths <= 50 + workers);
      CHECK(read_all_paths(dir.path()).size() == r.summary.total_final_paths);
    }
  }

  TEST_CASE("unsorted runs skip the merge") {
    const auto m = chain(4, RuleTemplate::NoLinkRetraversal);
    const IndexedNetwork net(m.network);
    TempDir dir;
    auto c = engine(m, 2);
    c.sort_and_merge = false;
    const auto r = multi_threaded_search(net, c, dir.path());
    CHECK(r.offsets.empty());
    CHECK_FALSE(std::filesystem::exists(merged_file(dir.path(), kFinalPathsTitle)));
    CHECK(read_all_paths(dir.path()).size() == 1);
  }

  TEST_CASE("configuration errors") {
    const auto m = chain(3, RuleTemplate::NoLinkRetraversal);
    const IndexedNetwork net(m.network);
    TempDir dir;
    auto c = engine(m, 0);
    CHECK_THROWS_AS(multi_threaded_search(net, c, dir.path()), EngineError);
    c.worker_count = 2;
    c.redistribution_threshold = 1;
    CHECK_THROWS_AS(multi_threaded_search(net, c, dir.path()), EngineError);
    c.redistribution_threshold = 2;
    c.traversal.end = 77;
    CHECK_THROWS_AS(multi_threaded_search(net, c, dir.path()), TraversalError);

    const auto blocker = dir / "plain-file";
    std::ofstream(blocker) << "x";
    CHECK_THROWS_AS(multi_threaded_search(net, engine(m, 2), blocker / "out"), EngineError);
  }

  TEST_CASE("a failing worker cleans up and rethrows") {
    const auto m = layered(10, 4, RuleTemplate::NoLinkRetraversal);
    const IndexedNetwork net(m.network);
    TempDir dir;
    std::ofstream(dir / "keep.txt") << "unrelated";
    auto c = engine(m, 2);
    c.progress = [](std::uint64_t) { throw std::runtime_error("progress sink broke"); };
    CHECK_THROWS_WITH_AS(multi_threaded_search(net, c, dir.path()), "progress sink broke", std::runtime_error);
    CHECK(result_files(dir.path()) == 0);
    CHECK(std::filesystem::exists(dir / "keep.txt"));
  }

  TEST_CASE("reusing an output directory replaces old results") {
    const IndexedNetwork big(layered(3, 3, RuleTemplate::NoLinkRetraversal).network);
    const auto small = chain(3, RuleTemplate::NoLinkRetraversal);
    TempDir dir;
    auto c = engine(layered(3, 3, RuleTemplate::NoLinkRetraversal), 4);
    multi_threaded_search(big, c, dir.path());
    const IndexedNetwork net(small.network);
    multi_threaded_search(net, engine(small, 1), dir.path());
    CHECK_FALSE(std::filesystem::exists(worker_file(dir.path(), kFinalPathsTitle, 3)));
    CHECK(read_all_paths(dir.path()).size() == 1);
  }
}
