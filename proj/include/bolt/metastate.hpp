#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "bolt/command.hpp"
#include "bolt/hli.hpp"
#include "bolt/ltt.hpp"
#include "bolt/types.hpp"

namespace bolt {

// Acknowledgment for one sequenced record. The numeric position is withheld
// (never reported as a fake number) when a pending promote on the target's
// promotable fork could renumber it.
struct AppendAck {
  Position position = 0;
  bool withheld = false;
};

struct TailInfo {
  Position value = 0;
  bool withheld = false;
};

struct ApplyResult {
  std::vector<AppendAck> positions;  // SequenceBatch, one per record in order
  std::optional<LogId> created;      // fork creation
  bool promoted = false;
  std::vector<LogId> squashed;       // squash / promote-side squashes
  std::optional<EngineError> error;

  bool ok() const { return !error.has_value(); }
};

struct ForestStats {
  std::uint64_t records_sequenced = 0;
  std::uint64_t entries_merged = 0;  // materialized by promote merges
  std::uint64_t entries_erased = 0;  // dropped by squash and promote
  std::uint64_t last_promote_touched_entries = 0;
  // Distinct tail-tree nodes touched per record of the last SequenceBatch.
  std::vector<std::uint32_t> last_batch_ltt_touched;
};

// The deterministic metadata state machine. Applies ordered commands to
// descriptors, per-log indexes and the lazy tail tree; enforces fork
// semantics, promotable-fork blocking, promote merges and squash. apply() is
// a pure function of (state, command): replaying the same sequence from the
// same initial state reproduces an identical fingerprint.
//
// Mutations happen only through apply() on a single sequential applier;
// read-only queries must be serialized with it by the caller.
class ForestState final : public ForestView {
 public:
  explicit ForestState(std::uint32_t initial_roots = 1);

  ApplyResult apply(const Command& cmd);

  // -- queries (sequential with apply) --
  Result<std::vector<ObjectRef>> read_meta(LogId log, Position from, Position to,
                                           ResolveStats* stats = nullptr) const;
  Result<TailInfo> get_tail(LogId log) const;
  // Bounds-checked resolution that ignores promotable-fork blocking; used by
  // verification paths that must observe withheld regions.
  Result<ObjectRef> resolve_internal(LogId log, Position pos, ResolveStats* stats = nullptr) const;
  Result<Position> tail_internal(LogId log) const;

  std::uint64_t fingerprint() const;
  std::vector<std::uint8_t> serialize() const;
  static Result<ForestState> deserialize(std::span<const std::uint8_t> blob);

  // -- introspection --
  const LogDescriptor* find_descriptor(LogId log) const override;
  const LogIndex* find_index(LogId log) const override;
  std::vector<LogId> live_logs() const;
  std::vector<LogId> children_of(LogId log) const;
  std::optional<Position> earliest_fp(LogId log) const;
  // Barrier floor visible to this log's reads, composed across ancestor
  // promotable forks; unset when unblocked.
  std::optional<Position> blocked_floor(LogId log) const;
  std::uint64_t total_index_entries() const;
  const ForestStats& stats() const { return stats_; }
  const TailTree& tails() const { return ltt_; }
  TailTree& tails() { return ltt_; }
  LogId max_assigned_id() const { return next_id_ - 1; }

 private:
  ApplyResult apply_sequence(const SequenceBatch& cmd);
  ApplyResult apply_create_cfork(const CreateCFork& cmd);
  ApplyResult apply_create_sfork(const CreateSFork& cmd);
  ApplyResult apply_promote(const Promote& cmd);
  ApplyResult apply_squash(const Squash& cmd);

  // Error taxonomy for referencing a log that must be live.
  std::optional<EngineError> check_live(LogId log) const;
  // Freeze count beyond the log's own promotable-children barriers, i.e. the
  // part imposed by ancestors. Nonzero means the log is blocked for new work.
  std::int64_t ancestor_freeze(LogId log) const;
  std::size_t promotable_count(LogId log) const;
  // Removes log and every descendant (continuous subtree plus severed-fork
  // closures), maintaining freeze/barrier bookkeeping on the surviving
  // parent. Appends removed ids to out.
  void internal_squash(LogId log, std::vector<LogId>* out);
  void erase_child_link(LogId parent, LogId child);

  LogId next_id_ = 1;
  std::map<LogId, LogDescriptor> descriptors_;  // all ids ever assigned
  std::map<LogId, LogIndex> indexes_;           // live logs only
  std::map<LogId, std::vector<LogId>> children_;             // live adjacency, creation order
  std::map<LogId, std::vector<LogId>> promotable_children_;  // live promotable cForks
  std::set<LogId> race_lost_;  // squashed because a sibling promoted first
  TailTree ltt_;
  ForestStats stats_;
};

}  // namespace bolt
