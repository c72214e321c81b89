#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bolt/types.hpp"

namespace bolt::harness {

// One completed client operation, wall-clock bracketed.
struct HistoryRecord {
  std::uint64_t session = 0;
  LogId log = kNoLog;             // append target
  std::uint64_t digest = 0;       // unique payload digest
  std::chrono::steady_clock::time_point invoke;
  std::chrono::steady_clock::time_point response;
  bool acknowledged = false;
};

struct History {
  std::vector<HistoryRecord> records;
};

struct InterleavingVerdict {
  std::uint64_t pairs_checked = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Real-time order must survive into every inheriting log's position order: if
// append A (to an ancestor or the log itself) completed before append B (to
// the log) was invoked, A must occupy a smaller position than B. Positions
// come from the final resolved digest sequences (digest per position per
// log); ancestors lists the inheritance chain of each checked log, self
// included.
InterleavingVerdict check_interleaving(
    const History& history,
    const std::map<LogId, std::vector<std::uint64_t>>& final_sequences,
    const std::map<LogId, std::vector<LogId>>& ancestors);

}  // namespace bolt::harness
