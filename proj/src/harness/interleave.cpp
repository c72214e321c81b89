#include "bolt/harness/interleave.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace bolt::harness {

InterleavingVerdict check_interleaving(
    const History& history,
    const std::map<LogId, std::vector<std::uint64_t>>& final_sequences,
    const std::map<LogId, std::vector<LogId>>& ancestors) {
  InterleavingVerdict verdict;

  for (const auto& [log, sequence] : final_sequences) {
    std::unordered_map<std::uint64_t, Position> digest_pos;
    digest_pos.reserve(sequence.size());
    for (Position p = 0; p < sequence.size(); ++p) digest_pos.emplace(sequence[p], p);

    auto anc_it = ancestors.find(log);
    if (anc_it == ancestors.end()) continue;
    std::unordered_set<LogId> chain(anc_it->second.begin(), anc_it->second.end());

    struct Op {
      std::chrono::steady_clock::time_point invoke;
      std::chrono::steady_clock::time_point response;
      Position pos;
      std::uint64_t session;
      std::uint64_t digest;
    };
    std::vector<Op> ops;
    for (const HistoryRecord& rec : history.records) {
      if (!rec.acknowledged || !chain.count(rec.log)) continue;
      auto it = digest_pos.find(rec.digest);
      if (it == digest_pos.end()) {
        std::ostringstream os;
        os << "log " << log << ": acknowledged append (session " << rec.session
           << ") never surfaced in the final sequence";
        verdict.violations.push_back(os.str());
        continue;
      }
      ops.push_back(Op{rec.invoke, rec.response, it->second, rec.session, rec.digest});
    }

    // Sweep: every op that completed before B was invoked must sit at a
    // smaller position than B.
    std::vector<const Op*> by_invoke;
    std::vector<const Op*> by_response;
    by_invoke.reserve(ops.size());
    by_response.reserve(ops.size());
    for (const Op& op : ops) {
      by_invoke.push_back(&op);
      by_response.push_back(&op);
    }
    std::sort(by_invoke.begin(), by_invoke.end(),
              [](const Op* a, const Op* b) { return a->invoke < b->invoke; });
    std::sort(by_response.begin(), by_response.end(),
              [](const Op* a, const Op* b) { return a->response < b->response; });

    std::size_t completed = 0;
    Position max_completed_pos = 0;
    bool any_completed = false;
    const Op* max_op = nullptr;
    for (const Op* b : by_invoke) {
      while (completed < by_response.size() && by_response[completed]->response < b->invoke) {
        if (!any_completed || by_response[completed]->pos > max_completed_pos) {
          max_completed_pos = by_response[completed]->pos;
          max_op = by_response[completed];
        }
        any_completed = true;
        ++completed;
      }
      verdict.pairs_checked += completed;
      if (any_completed && max_completed_pos > b->pos) {
        std::ostringstream os;
        os << "log " << log << ": append at position " << b->pos << " (session " << b->session
           << ") was invoked after an append at position " << max_completed_pos << " (session "
           << max_op->session << ") completed";
        verdict.violations.push_back(os.str());
      }
    }
  }
  return verdict;
}

}  // namespace bolt::harness
