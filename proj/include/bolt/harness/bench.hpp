#pragma once

#include <string>
#include <vector>

#include "bolt/harness/interleave.hpp"
#include "bolt/harness/workload.hpp"

namespace bolt::harness {

// One record per metric: name, value, unit. Logical metrics (counts, entries)
// are deterministic under a fixed seed; wall-clock metrics are not.
struct MetricRecord {
  std::string name;
  double value = 0;
  std::string unit;
  bool deterministic = true;
};

struct BenchReport {
  std::string bench;
  std::uint64_t seed = 0;
  std::vector<MetricRecord> metrics;

  double value_of(const std::string& name) const;
};

std::string report_json(const BenchReport& report);
std::string report_human(const BenchReport& report);
Status write_report(const BenchReport& report, const std::string& path);

// Fork-creation latency sweep across parent index sizes: zero-copy forks stay
// flat regardless of log length.
BenchReport bench_forklat(const std::vector<std::uint64_t>& parent_sizes, std::size_t trials);

// Per-append touched-structure counts per variant at a given fork fan-out.
BenchReport bench_ablate(Variant variant, std::size_t forks, std::size_t appends,
                         std::uint64_t seed);

// Index entry totals, lazy vs copy-everything, under the same workload.
BenchReport bench_memory(std::size_t forks, std::uint64_t records_to_root,
                         std::uint64_t records_to_forks, std::uint64_t seed);

struct DepthPoint {
  std::size_t depth = 0;
  double median_ns = 0;
  std::uint32_t max_steps = 0;
};

// Nested-fork chain; queries against the fork at each depth force recursion
// to the root. Returns per-depth medians and the worst recursion step count.
BenchReport bench_depth(std::size_t depth, std::uint64_t records_per_level, std::size_t queries,
                        std::uint64_t seed, std::vector<DepthPoint>* points = nullptr);

BenchReport bench_differential(const WorkloadOptions& opts);

struct LinearizeOutcome {
  InterleavingVerdict verdict;
  std::uint64_t acknowledged = 0;
  bool isolation_ok = false;  // parent broker saw no fork-directed frames
  std::string isolation_detail;
};

// Drives the real service over TCP: `sessions` concurrent clients append to a
// parent and `forks` continuous forks, then final reads rebuild the digest
// sequences for the interleaving check and per-broker request logs back the
// isolation assertion.
Result<LinearizeOutcome> run_linearize_scenario(std::size_t sessions, std::size_t forks,
                                                std::uint64_t appends, std::uint64_t seed,
                                                const std::string& workdir);

BenchReport bench_linearize(std::size_t sessions, std::size_t forks, std::uint64_t appends,
                            std::uint64_t seed, const std::string& workdir);

}  // namespace bolt::harness
