#include "bolt/harness/variants.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace bolt::harness {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kLazy: return "lazy";
    case Variant::kEagerTail: return "eager_tail";
    case Variant::kNaiveCF: return "naive_cf";
  }
  return "?";
}

std::unique_ptr<VariantEngine> make_variant(Variant v, std::uint32_t initial_roots) {
  switch (v) {
    case Variant::kLazy: return std::make_unique<LazyVariant>(initial_roots);
    case Variant::kEagerTail: return std::make_unique<EagerVariant>(false, initial_roots);
    case Variant::kNaiveCF: return std::make_unique<EagerVariant>(true, initial_roots);
  }
  return nullptr;
}

namespace {

// First slot index with pos >= p.
std::size_t slot_lower_bound(const std::vector<EagerVariant::ESlot>& slots, Position p) {
  std::size_t lo = 0;
  std::size_t hi = slots.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (slots[mid].pos < p) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

const IndexEntry* slot_find(const std::vector<EagerVariant::ESlot>& slots, Position p) {
  std::size_t i = slot_lower_bound(slots, p);
  if (i == slots.size() || slots[i].pos != p) return nullptr;
  return &slots[i].entry;
}

}  // namespace

EagerVariant::EagerVariant(bool copy_entries, std::uint32_t initial_roots)
    : copy_entries_(copy_entries) {
  for (std::uint32_t i = 0; i < initial_roots; ++i) {
    LogId id = next_id_++;
    ELog log;
    log.desc = LogDescriptor{id, LogKind::kRoot, kNoLog, std::nullopt, false, LogStatus::kLive};
    logs_.emplace(id, std::move(log));
  }
}

EagerVariant::ELog* EagerVariant::live(LogId log) {
  auto it = logs_.find(log);
  return it == logs_.end() ? nullptr : &it->second;
}

const EagerVariant::ELog* EagerVariant::live(LogId log) const {
  auto it = logs_.find(log);
  return it == logs_.end() ? nullptr : &it->second;
}

std::optional<EngineError> EagerVariant::check_live(LogId log) const {
  if (live(log)) return std::nullopt;
  if (dead_.count(log)) return make_error(ErrorCode::kLogSquashed, "log no longer live");
  return make_error(ErrorCode::kUnknownLog, "no such log");
}

void EagerVariant::collect_subtree(LogId log, std::vector<LogId>* out) const {
  out->push_back(log);
  const ELog* e = live(log);
  for (LogId c : e->children) {
    if (const ELog* child = live(c); child && child->desc.kind == LogKind::kCFork) {
      collect_subtree(c, out);
    }
  }
}

void EagerVariant::freeze_subtree(LogId log, std::int64_t delta) {
  std::vector<LogId> members;
  collect_subtree(log, &members);
  for (LogId m : members) logs_.at(m).freeze += delta;
}

std::size_t EagerVariant::promotable_count(LogId log) const {
  const ELog* e = live(log);
  std::size_t n = 0;
  for (LogId c : e->children) {
    if (const ELog* child = live(c); child && child->desc.promotable) ++n;
  }
  return n;
}

std::optional<Position> EagerVariant::earliest_fp(LogId log) const {
  const ELog* e = live(log);
  std::optional<Position> fp;
  for (LogId c : e->children) {
    if (const ELog* child = live(c); child && child->desc.promotable) {
      Position f = *child->desc.fork_point;
      fp = fp ? std::min(*fp, f) : f;
    }
  }
  return fp;
}

std::int64_t EagerVariant::ancestor_freeze(LogId log) const {
  return live(log)->freeze - static_cast<std::int64_t>(promotable_count(log));
}

std::uint64_t EagerVariant::local_count_at_or_below(const ELog& log, Position pos) const {
  std::size_t i = slot_lower_bound(log.index, pos + 1);  // first slot with pos' > pos
  if (i == 0) return 0;
  return log.index[i - 1].entry.local_count;
}

Position EagerVariant::barrier_in_child(const ELog& child, Position parent_pos) const {
  std::uint64_t total = child.index.empty() ? 0 : child.index.back().entry.local_count;
  Position lo = parent_pos;
  Position hi = parent_pos + total;
  while (lo < hi) {
    Position mid = lo + (hi - lo) / 2;
    // Addition-side comparison: an all-local prefix would wrap a subtraction.
    if (mid >= local_count_at_or_below(child, mid) + parent_pos) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::optional<Position> EagerVariant::blocked_floor(LogId log) const {
  std::vector<LogId> chain{log};
  while (live(chain.back())->desc.kind == LogKind::kCFork) {
    chain.push_back(live(chain.back())->desc.parent);
  }
  std::optional<Position> bound;
  for (std::size_t i = chain.size(); i-- > 0;) {
    if (auto efp = earliest_fp(chain[i])) {
      bool exempt = i > 0 && live(chain[i - 1])->desc.promotable;
      if (!exempt) bound = std::min(bound.value_or(std::numeric_limits<Position>::max()), *efp);
    }
    if (i > 0 && bound) bound = barrier_in_child(*live(chain[i - 1]), *bound);
  }
  return bound;
}

ApplyResult EagerVariant::apply(const Command& cmd) {
  return std::visit(
      [this](const auto& c) -> ApplyResult {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SequenceBatch>) {
          return apply_sequence(c);
        } else if constexpr (std::is_same_v<T, CreateCFork>) {
          return apply_create_cfork(c);
        } else if constexpr (std::is_same_v<T, CreateSFork>) {
          return apply_create_sfork(c);
        } else if constexpr (std::is_same_v<T, Promote>) {
          return apply_promote(c);
        } else {
          return apply_squash(c);
        }
      },
      cmd);
}

ApplyResult EagerVariant::apply_sequence(const SequenceBatch& cmd) {
  ApplyResult res;
  for (const SequenceRecord& rec : cmd.records) {
    if (rec.length == 0) {
      res.error = make_error(ErrorCode::kProtocolError, "zero-length record");
      return res;
    }
    if (auto err = check_live(rec.log)) {
      res.error = err;
      return res;
    }
    if (ancestor_freeze(rec.log) > 0) {
      res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                             "append target blocked by a pending promote", blocked_floor(rec.log));
      return res;
    }
  }
  for (const SequenceRecord& rec : cmd.records) {
    std::vector<LogId> members;
    collect_subtree(rec.log, &members);
    last_touched_ = members.size();
    Position assigned = logs_.at(rec.log).tail;
    for (LogId m : members) {
      ELog& e = logs_.at(m);
      if (m == rec.log || copy_entries_) {
        std::uint64_t lc = e.index.empty() ? 0 : e.index.back().entry.local_count;
        if (m == rec.log) ++lc;
        e.index.push_back(
            ESlot{e.tail, IndexEntry{ObjectRef{cmd.object, rec.offset, rec.length}, lc}});
        ++entries_;
      }
      ++e.tail;
    }
    res.positions.push_back(AppendAck{assigned, earliest_fp(rec.log).has_value()});
  }
  return res;
}

ApplyResult EagerVariant::apply_create_cfork(const CreateCFork& cmd) {
  ApplyResult res;
  if (auto err = check_live(cmd.parent)) {
    res.error = err;
    return res;
  }
  if (ancestor_freeze(cmd.parent) > 0) {
    res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                           "cannot fork a log blocked by a pending promote",
                           blocked_floor(cmd.parent));
    return res;
  }
  LogId id = next_id_++;
  Position fp = logs_.at(cmd.parent).tail;
  ELog child;
  child.desc = LogDescriptor{id, LogKind::kCFork, cmd.parent, fp, cmd.promotable,
                             LogStatus::kLive};
  child.tail = fp;
  logs_.emplace(id, std::move(child));
  logs_.at(cmd.parent).children.push_back(id);
  if (cmd.promotable) {
    freeze_subtree(cmd.parent, +1);
    for (LogId c : logs_.at(cmd.parent).children) {
      if (const ELog* sib = live(c); sib && sib->desc.promotable) freeze_subtree(c, -1);
    }
  } else if (std::size_t k = promotable_count(cmd.parent); k > 0) {
    freeze_subtree(id, static_cast<std::int64_t>(k));
  }
  res.created = id;
  return res;
}

ApplyResult EagerVariant::apply_create_sfork(const CreateSFork& cmd) {
  ApplyResult res;
  if (auto err = check_live(cmd.parent)) {
    res.error = err;
    return res;
  }
  if (ancestor_freeze(cmd.parent) > 0) {
    res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                           "cannot fork a log blocked by a pending promote",
                           blocked_floor(cmd.parent));
    return res;
  }
  Position tail = logs_.at(cmd.parent).tail;
  if (cmd.past && *cmd.past >= tail) {
    res.error = make_error(ErrorCode::kPositionOutOfRange, "past offset beyond parent tail");
    return res;
  }
  Position start = cmd.past ? *cmd.past + 1 : tail;
  if (auto efp = earliest_fp(cmd.parent); efp && start > *efp) {
    res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                           "severed fork would span a pending promote boundary", efp);
    return res;
  }
  LogId id = next_id_++;
  ELog child;
  child.desc = LogDescriptor{id, LogKind::kSFork, cmd.parent, start, false, LogStatus::kLive};
  child.tail = start;
  logs_.emplace(id, std::move(child));
  logs_.at(cmd.parent).children.push_back(id);
  res.created = id;
  return res;
}

void EagerVariant::internal_squash(LogId log, std::vector<LogId>* out) {
  const LogDescriptor top = logs_.at(log).desc;
  std::vector<LogId> members;
  collect_subtree(log, &members);
  std::vector<LogId> severed;
  for (LogId m : members) {
    ELog& e = logs_.at(m);
    out->push_back(m);
    entries_ -= e.index.size();
    for (LogId c : e.children) {
      if (const ELog* child = live(c); child && child->desc.kind == LogKind::kSFork) {
        severed.push_back(c);
      }
    }
  }
  for (LogId m : members) {
    LogDescriptor d = logs_.at(m).desc;
    d.status = LogStatus::kSquashed;
    dead_.emplace(m, d);
    logs_.erase(m);
  }
  if (ELog* parent = live(top.parent)) {
    auto& kids = parent->children;
    kids.erase(std::remove(kids.begin(), kids.end(), log), kids.end());
    if (top.kind == LogKind::kCFork && top.promotable) {
      for (LogId c : kids) {
        if (const ELog* sib = live(c); sib && sib->desc.promotable) freeze_subtree(c, +1);
      }
      freeze_subtree(top.parent, -1);
    }
  }
  for (LogId s : severed) {
    if (live(s)) internal_squash(s, out);
  }
}

ApplyResult EagerVariant::apply_squash(const Squash& cmd) {
  ApplyResult res;
  if (auto err = check_live(cmd.log)) {
    res.error = err;
    return res;
  }
  if (logs_.at(cmd.log).desc.kind == LogKind::kRoot) {
    res.error = make_error(ErrorCode::kSquashRootForbidden, "cannot squash a root log");
    return res;
  }
  internal_squash(cmd.log, &res.squashed);
  return res;
}

ApplyResult EagerVariant::apply_promote(const Promote& cmd) {
  ApplyResult res;
  const ELog* child = live(cmd.child);
  if (!child) {
    if (race_lost_.count(cmd.child)) {
      res.error = make_error(ErrorCode::kPromoteRaceLost, "a sibling promoted first");
    } else if (dead_.count(cmd.child)) {
      res.error = make_error(ErrorCode::kLogSquashed, "log no longer live");
    } else {
      res.error = make_error(ErrorCode::kUnknownLog, "no such log");
    }
    return res;
  }
  if (child->desc.kind != LogKind::kCFork || !child->desc.promotable) {
    res.error = make_error(ErrorCode::kNotPromotable,
                           "only promotable continuous forks can be promoted");
    return res;
  }
  if (ancestor_freeze(cmd.child) > 0) {
    res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                           "promote blocked by a pending promote above the parent",
                           blocked_floor(cmd.child));
    return res;
  }

  LogId parent_id = child->desc.parent;
  Position fp = *child->desc.fork_point;
  Position child_tail = child->tail;

  // Merge plan: for each child position in [fp, child_tail), decide whether
  // the parent owns an entry there afterwards and whether it counts as local.
  struct NewSlot {
    Position pos;
    ObjectRef ref;
    bool local;
  };
  std::vector<NewSlot> plan;
  {
    const ELog& p = logs_.at(parent_id);
    std::size_t ci = slot_lower_bound(child->index, fp);
    std::size_t pi = slot_lower_bound(p.index, fp);
    std::uint64_t locals_seen = 0;
    std::uint64_t prev_child_lc =
        ci == 0 ? 0 : child->index[ci - 1].entry.local_count;
    for (Position pos = fp; pos < child_tail; ++pos) {
      bool consumed_child = false;
      if (ci < child->index.size() && child->index[ci].pos == pos) {
        bool child_local = child->index[ci].entry.local_count == prev_child_lc + 1;
        prev_child_lc = child->index[ci].entry.local_count;
        ++ci;
        consumed_child = true;
        if (child_local) {
          ++locals_seen;
          plan.push_back(NewSlot{pos, child->index[ci - 1].entry.ref, true});
          continue;
        }
      }
      (void)consumed_child;
      Position q = pos - locals_seen;  // parent coordinate of the inherited slot
      while (pi < p.index.size() && p.index[pi].pos < q) ++pi;
      if (pi < p.index.size() && p.index[pi].pos == q) {
        std::uint64_t before = q == 0 ? 0 : local_count_at_or_below(p, q - 1);
        bool parent_local = p.index[pi].entry.local_count == before + 1;
        plan.push_back(NewSlot{pos, p.index[pi].entry.ref, parent_local});
        ++pi;
      }
    }
  }

  // Squash the other continuous children; promotable ones lost the race.
  for (LogId c : std::vector<LogId>(logs_.at(parent_id).children)) {
    if (c == cmd.child) continue;
    const ELog* sib = live(c);
    if (!sib || sib->desc.kind != LogKind::kCFork) continue;
    if (sib->desc.promotable) race_lost_.insert(c);
    internal_squash(c, &res.squashed);
  }

  freeze_subtree(cmd.child, +1);
  freeze_subtree(parent_id, -1);

  ELog& parent = logs_.at(parent_id);
  {
    std::size_t keep = slot_lower_bound(parent.index, fp);
    entries_ -= parent.index.size() - keep;
    parent.index.resize(keep);
    std::uint64_t count = fp == 0 ? 0 : local_count_at_or_below(parent, fp - 1);
    for (const NewSlot& s : plan) {
      if (s.local) ++count;
      parent.index.push_back(ESlot{s.pos, IndexEntry{s.ref, count}});
      ++entries_;
    }
  }
  parent.tail = child_tail;

  // Re-parent the promoted child's children; restore barriers owed by
  // promotable grandchildren at the parent's level.
  std::vector<LogId> kids = logs_.at(cmd.child).children;
  std::vector<LogId> promotable_kids;
  for (LogId y : kids) {
    ELog& e = logs_.at(y);
    e.desc.parent = parent_id;
    parent.children.push_back(y);
    if (e.desc.kind == LogKind::kCFork && e.desc.promotable) promotable_kids.push_back(y);
  }
  entries_ -= logs_.at(cmd.child).index.size();
  {
    LogDescriptor d = logs_.at(cmd.child).desc;
    d.status = LogStatus::kPromotedAway;
    dead_.emplace(cmd.child, d);
    auto& pk = parent.children;
    pk.erase(std::remove(pk.begin(), pk.end(), cmd.child), pk.end());
    logs_.erase(cmd.child);
  }
  for (std::size_t i = 0; i < promotable_kids.size(); ++i) {
    freeze_subtree(parent_id, +1);
    for (LogId c : logs_.at(parent_id).children) {
      if (const ELog* sib = live(c); sib && sib->desc.promotable) freeze_subtree(c, -1);
    }
  }

  res.promoted = true;
  return res;
}

Result<ObjectRef> EagerVariant::do_resolve(LogId log, Position pos) const {
  LogId cur = log;
  Position p = pos;
  for (;;) {
    const ELog* e = live(cur);
    if (!e) return make_error(ErrorCode::kUnknownLog, "resolve: no such log");
    if (const IndexEntry* hit = slot_find(e->index, p)) {
      return hit->ref;
    }
    if (e->desc.parent == kNoLog) {
      return make_error(ErrorCode::kPositionOutOfRange, "resolve: unmapped position");
    }
    if (copy_entries_) {
      // Full indexes hold every record since creation; a miss can only be the
      // shared prefix below the smallest key, at the same coordinate upward.
      cur = e->desc.parent;
      continue;
    }
    std::size_t i = slot_lower_bound(e->index, p);
    std::uint64_t lc = i == 0 ? 0 : e->index[i - 1].entry.local_count;
    cur = e->desc.parent;
    p -= lc;
  }
}

Result<std::vector<ObjectRef>> EagerVariant::read_meta(LogId log, Position from,
                                                       Position to) const {
  if (auto err = check_live(log)) return *err;
  if (from > to) return make_error(ErrorCode::kProtocolError, "read range inverted");
  if (auto floor = blocked_floor(log); floor && to > *floor) {
    return make_error(ErrorCode::kBlockedByPromotableFork,
                      "read beyond a pending promote boundary", floor);
  }
  if (to > live(log)->tail) {
    return make_error(ErrorCode::kPositionOutOfRange, "read beyond tail");
  }
  std::vector<ObjectRef> out;
  out.reserve(to - from);
  for (Position p = from; p < to; ++p) {
    auto r = do_resolve(log, p);
    if (!r.ok()) return r.error();
    out.push_back(r.take());
  }
  return out;
}

Result<TailInfo> EagerVariant::get_tail(LogId log) const {
  if (auto err = check_live(log)) return *err;
  return TailInfo{live(log)->tail, blocked_floor(log).has_value()};
}

Result<ObjectRef> EagerVariant::resolve_internal(LogId log, Position pos) const {
  if (auto err = check_live(log)) return *err;
  if (pos >= live(log)->tail) {
    return make_error(ErrorCode::kPositionOutOfRange, "position beyond tail");
  }
  return do_resolve(log, pos);
}

Result<Position> EagerVariant::tail_internal(LogId log) const {
  if (auto err = check_live(log)) return *err;
  return live(log)->tail;
}

std::vector<LogId> EagerVariant::live_logs() const {
  std::vector<LogId> out;
  out.reserve(logs_.size());
  for (const auto& [id, e] : logs_) out.push_back(id);
  return out;
}

const LogDescriptor* EagerVariant::descriptor(LogId log) const {
  if (const ELog* e = live(log)) return &e->desc;
  auto it = dead_.find(log);
  return it == dead_.end() ? nullptr : &it->second;
}

std::vector<LogId> EagerVariant::children_of(LogId log) const {
  const ELog* e = live(log);
  return e ? e->children : std::vector<LogId>{};
}

}  // namespace bolt::harness
