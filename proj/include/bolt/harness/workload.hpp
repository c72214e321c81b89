#pragma once

#include <string>

#include "bolt/harness/variants.hpp"

namespace bolt::harness {

// Weighted command grammar; the seed fully determines the sequence generated
// against a given driver engine. Reads are not commands: the differential
// runner probes them post hoc against every variant.
struct WorkloadOptions {
  std::uint64_t seed = 1;
  std::size_t commands = 1000;
  unsigned w_append = 70;
  unsigned w_cfork = 10;
  unsigned w_sfork = 5;
  unsigned w_promote = 4;
  unsigned w_squash = 4;
  unsigned w_invalid = 2;  // deliberately bad commands exercising error paths
  double promotable_fraction = 0.10;
  std::size_t max_records_per_batch = 3;
  std::uint32_t initial_roots = 1;
  // Generation steering so acceptance-scale runs hit the required shape.
  std::size_t min_forks = 0;
  std::size_t min_nesting = 0;
};

struct RecordedRun {
  std::vector<Command> commands;
  std::vector<ApplyResult> results;  // from the driving engine
  std::uint64_t records_appended = 0;
  // Per-append 1 + live continuous descendants of the target, summed: the
  // entry count a copy-everything engine must end up with (ignoring later
  // squashes, so only exact when nothing is squashed).
  std::uint64_t naive_entry_prediction = 0;
  std::size_t forks_created = 0;
  std::size_t max_nesting = 0;
};

// Drives the engine with generated commands, recording both the sequence and
// the per-command results for later replay against the oracle variants.
RecordedRun generate_workload(VariantEngine& driver, const WorkloadOptions& opts);

// Replays a recorded sequence.
std::vector<ApplyResult> replay_run(VariantEngine& engine, const RecordedRun& run);

struct DifferentialReport {
  bool ok = false;
  std::string divergence;  // empty when ok
  std::uint64_t commands = 0;
  std::uint64_t lazy_entries = 0;
  std::uint64_t eager_entries = 0;
  std::uint64_t naive_entries = 0;
  std::size_t live_logs = 0;
  std::size_t forks_created = 0;
  std::size_t max_nesting = 0;
};

// Generates one workload on the lazy engine, replays it on both oracles and
// compares per-command results, final tails, withheld flags, full resolve
// sequences and read blocking.
DifferentialReport run_differential(const WorkloadOptions& opts);

bool results_equal(const ApplyResult& a, const ApplyResult& b, std::string* why);

}  // namespace bolt::harness
