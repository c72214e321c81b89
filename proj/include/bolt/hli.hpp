#pragma once

#include <cstdint>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// Sparse per-log index holding only locally appended records. Keys strictly
// increase and every insert lands past the current maximum, so the backing
// store is a sorted vector with binary-search predecessor lookups (the
// observable contract is an ordered map keyed by position).
class LogIndex {
 public:
  struct Slot {
    Position pos;
    IndexEntry entry;
  };

  explicit LogIndex(LogId owner) : owner_(owner) {}

  LogId owner() const { return owner_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  const std::vector<Slot>& slots() const { return slots_; }

  // pre: pos is strictly greater than every existing key. The entry's
  // local_count becomes previous max + 1 (1 for the first entry).
  void insert_local(Position pos, const ObjectRef& ref);

  // Raw append used by the promote merge; the caller supplies local_count.
  void append_entry(Position pos, IndexEntry entry);

  // Drops every entry with key >= pos. Returns the number removed.
  std::size_t truncate_from(Position pos);

  // Exact lookup; nullptr if absent.
  const IndexEntry* find(Position pos) const;

  // Greatest entry with key strictly below pos; nullptr if none.
  const Slot* predecessor(Position pos) const;

  // local_count of the greatest entry with key <= pos; 0 if none.
  std::uint64_t local_count_at_or_below(Position pos) const;

  std::uint64_t max_local_count() const {
    return slots_.empty() ? 0 : slots_.back().entry.local_count;
  }

 private:
  LogId owner_;
  std::vector<Slot> slots_;
};

// Read access to the descriptor + index store, as needed by resolution.
class ForestView {
 public:
  virtual ~ForestView() = default;
  virtual const LogDescriptor* find_descriptor(LogId log) const = 0;
  virtual const LogIndex* find_index(LogId log) const = 0;
};

struct ResolveStats {
  std::uint32_t steps = 0;  // recursion hops performed (0 = local hit)
};

// Maps a position in `log`'s total order to the object location of the record
// occupying it. Inherited positions recurse into ancestors: the largest local
// key below pos yields the cumulative local count l, and pos - l is looked up
// in the parent. Bounds and blocking are the caller's responsibility.
Result<ObjectRef> resolve(LogId log, Position pos, const ForestView& forest,
                          ResolveStats* stats = nullptr);

// Child-coordinate of a parent-position barrier: the smallest child position p
// such that p - local_count_at_or_below(p) >= parent_pos. With no local
// entries this is parent_pos itself.
Result<Position> map_parent_barrier(LogId child, Position parent_pos, const ForestView& forest);

}  // namespace bolt
