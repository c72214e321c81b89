#include "bolt/hli.hpp"

#include <algorithm>
#include <cassert>

namespace bolt {

namespace {

struct SlotLess {
  bool operator()(const LogIndex::Slot& s, Position p) const { return s.pos < p; }
  bool operator()(Position p, const LogIndex::Slot& s) const { return p < s.pos; }
};

}  // namespace

void LogIndex::insert_local(Position pos, const ObjectRef& ref) {
  assert(slots_.empty() || pos > slots_.back().pos);
  slots_.push_back(Slot{pos, IndexEntry{ref, max_local_count() + 1}});
}

void LogIndex::append_entry(Position pos, IndexEntry entry) {
  assert(slots_.empty() || pos > slots_.back().pos);
  slots_.push_back(Slot{pos, entry});
}

std::size_t LogIndex::truncate_from(Position pos) {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), pos, SlotLess{});
  std::size_t removed = static_cast<std::size_t>(slots_.end() - it);
  slots_.erase(it, slots_.end());
  return removed;
}

const IndexEntry* LogIndex::find(Position pos) const {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), pos, SlotLess{});
  if (it == slots_.end() || it->pos != pos) return nullptr;
  return &it->entry;
}

const LogIndex::Slot* LogIndex::predecessor(Position pos) const {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), pos, SlotLess{});
  if (it == slots_.begin()) return nullptr;
  return &*(it - 1);
}

std::uint64_t LogIndex::local_count_at_or_below(Position pos) const {
  auto it = std::upper_bound(slots_.begin(), slots_.end(), pos, SlotLess{});
  if (it == slots_.begin()) return 0;
  return (it - 1)->entry.local_count;
}

Result<ObjectRef> resolve(LogId log, Position pos, const ForestView& forest,
                          ResolveStats* stats) {
  LogId cur = log;
  Position p = pos;
  for (;;) {
    const LogDescriptor* d = forest.find_descriptor(cur);
    if (d == nullptr) return make_error(ErrorCode::kUnknownLog, "resolve: no descriptor");
    const LogIndex* idx = forest.find_index(cur);
    if (idx == nullptr) return make_error(ErrorCode::kUnknownLog, "resolve: no index");

    if (const IndexEntry* e = idx->find(p)) return e->ref;

    if (d->parent == kNoLog) {
      // A root's local index is dense over [0, tail); the caller checked the
      // bound, so a miss here means the position never existed.
      return make_error(ErrorCode::kPositionOutOfRange, "resolve: unmapped position");
    }
    const LogIndex::Slot* pred = idx->predecessor(p);
    std::uint64_t local = pred ? pred->entry.local_count : 0;
    cur = d->parent;
    p -= local;
    if (stats) ++stats->steps;
  }
}

Result<Position> map_parent_barrier(LogId child, Position parent_pos, const ForestView& forest) {
  const LogIndex* idx = forest.find_index(child);
  if (idx == nullptr) return make_error(ErrorCode::kUnknownLog, "barrier: no index");
  // f(p) = p - local_count_at_or_below(p) is non-decreasing and steps by 0 or
  // 1, so the smallest p with f(p) >= parent_pos sits in
  // [parent_pos, parent_pos + total local entries].
  Position lo = parent_pos;
  Position hi = parent_pos + idx->max_local_count();
  while (lo < hi) {
    Position mid = lo + (hi - lo) / 2;
    // f(mid) >= parent_pos, written addition-side: an all-local prefix makes
    // the subtraction wrap.
    if (mid >= idx->local_count_at_or_below(mid) + parent_pos) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

}  // namespace bolt
