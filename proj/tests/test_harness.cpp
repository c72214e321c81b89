#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bolt/harness/bench.hpp"
#include "bolt/harness/interleave.hpp"
#include "bolt/harness/workload.hpp"

using namespace bolt;
using namespace bolt::harness;

namespace {

SequenceBatch one_record(LogId log, std::uint64_t tag) {
  SequenceBatch b;
  b.object = ObjectId{tag, tag};
  b.records.push_back(SequenceRecord{log, 0, 64});
  return b;
}

}  // namespace

TEST_CASE("copy-everything oracle duplicates parent appends into children") {
  EagerVariant naive(true);
  REQUIRE(naive.apply(Command{one_record(1, 1)}).ok());  // g0
  LogId r = *naive.apply(Command{CreateCFork{1, false}}).created;
  REQUIRE(naive.apply(Command{one_record(r, 2)}).ok());  // r0
  CHECK(naive.index_entries() == 2);
  // g1 lands in both indexes.
  REQUIRE(naive.apply(Command{one_record(1, 3)}).ok());
  CHECK(naive.index_entries() == 4);
  CHECK(naive.tail_internal(r).value() == 3);
  // Single-lookup resolution sees the copy directly.
  CHECK(naive.resolve_internal(r, 2).value().object == ObjectId{3, 3});
  // Lazy engine agrees on the view with a fifth of the entries.
  LazyVariant lazy;
  lazy.apply(Command{one_record(1, 1)});
  lazy.apply(Command{CreateCFork{1, false}});
  lazy.apply(Command{one_record(r, 2)});
  lazy.apply(Command{one_record(1, 3)});
  CHECK(lazy.index_entries() == 3);
  for (Position p = 0; p < 3; ++p) {
    CHECK(lazy.resolve_internal(r, p).value() == naive.resolve_internal(r, p).value());
  }
}

TEST_CASE("eager-tail oracle touches every descendant per append") {
  EagerVariant eager(false);
  for (int i = 0; i < 10; ++i) {
    REQUIRE(eager.apply(Command{CreateCFork{1, false}}).ok());
  }
  REQUIRE(eager.apply(Command{one_record(1, 9)}).ok());
  CHECK(eager.last_append_touched() == 11);  // subtree size: root + 10 forks
  CHECK(eager.index_entries() == 1);         // tails only, no copies
  for (LogId fork = 2; fork <= 11; ++fork) {
    CHECK(eager.tail_internal(fork).value() == 1);
  }
  // The lazy engine's touched-node count is logarithmic, not linear.
  LazyVariant lazy;
  for (int i = 0; i < 10; ++i) lazy.apply(Command{CreateCFork{1, false}});
  lazy.apply(Command{one_record(1, 9)});
  CHECK(lazy.last_append_touched() < 11 + 8);
}

TEST_CASE("differential runs agree across all three variants") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    WorkloadOptions opts;
    opts.seed = seed;
    opts.commands = 600;
    opts.min_forks = 8;
    opts.min_nesting = 3;
    DifferentialReport report = run_differential(opts);
    CAPTURE(seed);
    CAPTURE(report.divergence);
    CHECK(report.ok);
    CHECK(report.commands == 600);
    // Tail updates alone never copy entries.
    CHECK(report.eager_entries == report.lazy_entries);
  }
}

TEST_CASE("interleaving checker accepts a sequential history") {
  History h;
  auto t0 = std::chrono::steady_clock::now();
  std::map<LogId, std::vector<std::uint64_t>> sequences;
  std::map<LogId, std::vector<LogId>> ancestors{{2, {2, 1}}};
  for (int i = 0; i < 10; ++i) {
    HistoryRecord rec;
    rec.session = 0;
    rec.log = i % 2 ? 1 : 2;
    rec.digest = 100 + static_cast<std::uint64_t>(i);
    rec.invoke = t0 + std::chrono::microseconds(2 * i);
    rec.response = t0 + std::chrono::microseconds(2 * i + 1);
    rec.acknowledged = true;
    h.records.push_back(rec);
    sequences[2].push_back(rec.digest);  // child sees everything, in order
  }
  auto verdict = check_interleaving(h, sequences, ancestors);
  CHECK(verdict.ok());
  CHECK(verdict.pairs_checked > 0);
}

TEST_CASE("interleaving checker flags a reordered engine") {
  History h;
  auto t0 = std::chrono::steady_clock::now();
  std::map<LogId, std::vector<LogId>> ancestors{{2, {2, 1}}};
  std::vector<std::uint64_t> digests;
  for (int i = 0; i < 6; ++i) {
    HistoryRecord rec;
    rec.session = 0;
    rec.log = i % 2 ? 1 : 2;
    rec.digest = 100 + static_cast<std::uint64_t>(i);
    rec.invoke = t0 + std::chrono::microseconds(2 * i);
    rec.response = t0 + std::chrono::microseconds(2 * i + 1);
    rec.acknowledged = true;
    h.records.push_back(rec);
    digests.push_back(rec.digest);
  }
  // A faulty engine that swapped two completed appends.
  std::swap(digests[1], digests[4]);
  std::map<LogId, std::vector<std::uint64_t>> sequences{{2, digests}};
  auto verdict = check_interleaving(h, sequences, ancestors);
  CHECK_FALSE(verdict.ok());

  // A lost acknowledged append is a violation too.
  std::map<LogId, std::vector<std::uint64_t>> dropped{{2, {100, 101}}};
  CHECK_FALSE(check_interleaving(h, dropped, ancestors).ok());
}

TEST_CASE("fork latency stays flat as the parent grows") {
  BenchReport report = bench_forklat({1000, 100000}, 30);
  double ratio = report.value_of("fork_median_ratio");
  CHECK(ratio > 0);
  CHECK(ratio <= 2.0);
}

TEST_CASE("memory bench predicts the copy-everything entry count exactly") {
  BenchReport report = bench_memory(20, 500, 100, 3);
  CHECK(report.value_of("lazy_entries") == 600);
  CHECK(report.value_of("naive_entries") == report.value_of("naive_predicted"));
  CHECK(report.value_of("naive_entries") == 500 * 21 + 100);
  CHECK(report.value_of("duplication_factor") > 15);
}

TEST_CASE("bench reports serialize to json") {
  BenchReport report;
  report.bench = "demo";
  report.seed = 9;
  report.metrics.push_back(MetricRecord{"x", 1.5, "ns", false});
  std::string json = report_json(report);
  CHECK(json.find("\"bench\": \"demo\"") != std::string::npos);
  CHECK(json.find("\"x\"") != std::string::npos);
  CHECK(report_human(report).find("demo") != std::string::npos);
}
