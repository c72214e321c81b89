#include "bolt/metastate.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#include "bolt/util/bytes.hpp"
#include "bolt/util/checksum.hpp"

namespace bolt {

ForestState::ForestState(std::uint32_t initial_roots) {
  for (std::uint32_t i = 0; i < initial_roots; ++i) {
    LogId id = next_id_++;
    descriptors_.emplace(id, LogDescriptor{id, LogKind::kRoot, kNoLog, std::nullopt, false,
                                           LogStatus::kLive});
    indexes_.emplace(id, LogIndex(id));
    ltt_.insert_root(id, 0);
  }
}

const LogDescriptor* ForestState::find_descriptor(LogId log) const {
  auto it = descriptors_.find(log);
  return it == descriptors_.end() ? nullptr : &it->second;
}

const LogIndex* ForestState::find_index(LogId log) const {
  auto it = indexes_.find(log);
  return it == indexes_.end() ? nullptr : &it->second;
}

std::vector<LogId> ForestState::live_logs() const {
  std::vector<LogId> out;
  for (const auto& [id, d] : descriptors_) {
    if (d.live()) out.push_back(id);
  }
  return out;
}

std::vector<LogId> ForestState::children_of(LogId log) const {
  auto it = children_.find(log);
  return it == children_.end() ? std::vector<LogId>{} : it->second;
}

std::optional<EngineError> ForestState::check_live(LogId log) const {
  const LogDescriptor* d = find_descriptor(log);
  if (d == nullptr) return make_error(ErrorCode::kUnknownLog, "no such log");
  if (!d->live()) return make_error(ErrorCode::kLogSquashed, "log no longer live");
  return std::nullopt;
}

std::size_t ForestState::promotable_count(LogId log) const {
  auto it = promotable_children_.find(log);
  return it == promotable_children_.end() ? 0 : it->second.size();
}

std::optional<Position> ForestState::earliest_fp(LogId log) const {
  auto it = promotable_children_.find(log);
  if (it == promotable_children_.end() || it->second.empty()) return std::nullopt;
  Position fp = std::numeric_limits<Position>::max();
  for (LogId c : it->second) fp = std::min(fp, *descriptors_.at(c).fork_point);
  return fp;
}

std::int64_t ForestState::ancestor_freeze(LogId log) const {
  auto fc = ltt_.freeze_count(log);
  return fc.value() - static_cast<std::int64_t>(promotable_count(log));
}

std::optional<Position> ForestState::blocked_floor(LogId log) const {
  // Chain of continuous-inheritance ancestors, bottom-up; barriers propagate
  // only along cFork edges (severed forks start below every parent barrier).
  std::vector<LogId> chain{log};
  while (descriptors_.at(chain.back()).kind == LogKind::kCFork) {
    chain.push_back(descriptors_.at(chain.back()).parent);
  }
  std::optional<Position> bound;
  for (std::size_t i = chain.size(); i-- > 0;) {
    LogId node = chain[i];
    if (auto efp = earliest_fp(node)) {
      // A live promotable child is exempt from its own parent's barrier.
      bool exempt = i > 0 && descriptors_.at(chain[i - 1]).promotable;
      if (!exempt) bound = std::min(bound.value_or(std::numeric_limits<Position>::max()), *efp);
    }
    if (i > 0 && bound) {
      bound = map_parent_barrier(chain[i - 1], *bound, *this).take();
    }
  }
  return bound;
}

ApplyResult ForestState::apply(const Command& cmd) {
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

ApplyResult ForestState::apply_sequence(const SequenceBatch& cmd) {
  ApplyResult res;
  // Validate every record before mutating anything: commands are atomic.
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
  stats_.last_batch_ltt_touched.clear();
  for (const SequenceRecord& rec : cmd.records) {
    ltt_.reset_touch_window();
    Position pos = ltt_.tail_query(rec.log).take();
    indexes_.at(rec.log).insert_local(pos, ObjectRef{cmd.object, rec.offset, rec.length});
    (void)ltt_.subtree_add(rec.log, 1);
    stats_.last_batch_ltt_touched.push_back(
        static_cast<std::uint32_t>(ltt_.touched_in_window()));
    bool withheld = earliest_fp(rec.log).has_value();
    res.positions.push_back(AppendAck{pos, withheld});
    ++stats_.records_sequenced;
  }
  return res;
}

ApplyResult ForestState::apply_create_cfork(const CreateCFork& cmd) {
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
  Position fp = ltt_.tail_query(cmd.parent).take();
  descriptors_.emplace(
      id, LogDescriptor{id, LogKind::kCFork, cmd.parent, fp, cmd.promotable, LogStatus::kLive});
  indexes_.emplace(id, LogIndex(id));
  (void)ltt_.insert_child(cmd.parent, id, fp);
  children_[cmd.parent].push_back(id);
  if (cmd.promotable) {
    promotable_children_[cmd.parent].push_back(id);
    (void)ltt_.subtree_freeze(cmd.parent, +1);
    for (LogId sibling : promotable_children_[cmd.parent]) {
      (void)ltt_.subtree_freeze(sibling, -1);
    }
  } else if (std::size_t k = promotable_count(cmd.parent); k > 0) {
    // A non-promotable fork born under pending barriers starts blocked.
    (void)ltt_.subtree_freeze(id, static_cast<std::int64_t>(k));
  }
  res.created = id;
  return res;
}

ApplyResult ForestState::apply_create_sfork(const CreateSFork& cmd) {
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
  Position tail = ltt_.tail_query(cmd.parent).take();
  if (cmd.past && *cmd.past >= tail) {
    res.error = make_error(ErrorCode::kPositionOutOfRange, "past offset beyond parent tail");
    return res;
  }
  Position start = cmd.past ? *cmd.past + 1 : tail;
  if (auto efp = earliest_fp(cmd.parent); efp && start > *efp) {
    // The severed view would cover positions a promote may rewrite.
    res.error = make_error(ErrorCode::kBlockedByPromotableFork,
                           "severed fork would span a pending promote boundary", efp);
    return res;
  }
  LogId id = next_id_++;
  descriptors_.emplace(
      id, LogDescriptor{id, LogKind::kSFork, cmd.parent, start, false, LogStatus::kLive});
  indexes_.emplace(id, LogIndex(id));
  ltt_.insert_root(id, start);
  children_[cmd.parent].push_back(id);
  res.created = id;
  return res;
}

void ForestState::erase_child_link(LogId parent, LogId child) {
  auto it = children_.find(parent);
  if (it == children_.end()) return;
  auto& v = it->second;
  v.erase(std::remove(v.begin(), v.end(), child), v.end());
  if (v.empty()) children_.erase(it);
}

void ForestState::internal_squash(LogId log, std::vector<LogId>* out) {
  const LogDescriptor top = descriptors_.at(log);
  std::vector<LogId> removed = ltt_.remove_subtree(log).take();
  if (top.kind == LogKind::kCFork && top.promotable) {
    // Undo this fork's barrier on the surviving parent: re-exempt the
    // remaining promotable siblings, then lift one parent-subtree freeze.
    auto& siblings = promotable_children_.at(top.parent);
    siblings.erase(std::remove(siblings.begin(), siblings.end(), log), siblings.end());
    for (LogId sibling : siblings) (void)ltt_.subtree_freeze(sibling, +1);
    if (siblings.empty()) promotable_children_.erase(top.parent);
    (void)ltt_.subtree_freeze(top.parent, -1);
  }
  erase_child_link(top.parent, log);
  for (LogId id : removed) {
    out->push_back(id);
    descriptors_.at(id).status = LogStatus::kSquashed;
    stats_.entries_erased += indexes_.at(id).size();
    indexes_.erase(id);
    promotable_children_.erase(id);
    // Severed forks hang off the inheritance subtree as separate tour trees;
    // squash clears them recursively as well (a live log must never point at
    // a squashed parent).
    std::vector<LogId> severed = children_of(id);
    children_.erase(id);
    for (LogId s : severed) {
      const LogDescriptor* sd = find_descriptor(s);
      // Continuous children share the removed tour range and are handled by
      // this loop; only severed children live in their own trees.
      if (sd && sd->live() && sd->kind == LogKind::kSFork) internal_squash(s, out);
    }
  }
}

ApplyResult ForestState::apply_squash(const Squash& cmd) {
  ApplyResult res;
  if (auto err = check_live(cmd.log)) {
    res.error = err;
    return res;
  }
  if (descriptors_.at(cmd.log).kind == LogKind::kRoot) {
    res.error = make_error(ErrorCode::kSquashRootForbidden, "cannot squash a root log");
    return res;
  }
  internal_squash(cmd.log, &res.squashed);
  return res;
}

ApplyResult ForestState::apply_promote(const Promote& cmd) {
  ApplyResult res;
  const LogDescriptor* d = find_descriptor(cmd.child);
  if (d == nullptr) {
    res.error = make_error(ErrorCode::kUnknownLog, "no such log");
    return res;
  }
  if (d->status == LogStatus::kSquashed && race_lost_.count(cmd.child)) {
    res.error = make_error(ErrorCode::kPromoteRaceLost, "a sibling promoted first");
    return res;
  }
  if (!d->live()) {
    res.error = make_error(ErrorCode::kLogSquashed, "log no longer live");
    return res;
  }
  if (d->kind != LogKind::kCFork || !d->promotable) {
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

  LogId parent = d->parent;
  Position fp = *d->fork_point;
  Position child_tail = ltt_.tail_query(cmd.child).take();
  Position parent_tail = ltt_.tail_query(parent).take();

  // Merge plan for parent positions [fp, child_tail): child-local and
  // parent-local entries materialize at their child coordinates; entries the
  // parent inherited from its own parent stay unmaterialized (the local-count
  // arithmetic keeps resolving them upward).
  const LogIndex& child_idx = indexes_.at(cmd.child);
  LogIndex& parent_idx = indexes_.at(parent);
  std::vector<LogIndex::Slot> merged;
  {
    const auto& cslots = child_idx.slots();
    const auto& pslots = parent_idx.slots();
    auto cc = cslots.begin();
    auto pc = std::lower_bound(pslots.begin(), pslots.end(), fp,
                               [](const LogIndex::Slot& s, Position p) { return s.pos < p; });
    std::uint64_t locals_seen = 0;
    for (Position p = fp; p < child_tail; ++p) {
      if (cc != cslots.end() && cc->pos == p) {
        merged.push_back(LogIndex::Slot{p, cc->entry});
        ++cc;
        ++locals_seen;
        continue;
      }
      Position q = p - locals_seen;  // parent coordinate of the inherited slot
      assert(q < parent_tail);
      if (pc != pslots.end() && pc->pos == q) {
        merged.push_back(LogIndex::Slot{p, pc->entry});
        ++pc;
      }
    }
  }

  // Squash every other continuous descendant of the parent. Their inherited
  // views would change retroactively under the merged content; promotable
  // siblings lost the race. Severed forks of the parent survive: their views
  // sit entirely below every barrier by construction.
  for (LogId c : children_of(parent)) {
    if (c == cmd.child) continue;
    const LogDescriptor& cd = descriptors_.at(c);
    if (cd.kind != LogKind::kCFork) continue;
    if (cd.promotable) race_lost_.insert(c);
    internal_squash(c, &res.squashed);
  }

  // Lift the winner's barrier (exemption first, then the parent freeze).
  {
    auto& siblings = promotable_children_.at(parent);
    siblings.erase(std::remove(siblings.begin(), siblings.end(), cmd.child), siblings.end());
    assert(siblings.empty());
    promotable_children_.erase(parent);
    (void)ltt_.subtree_freeze(cmd.child, +1);
    (void)ltt_.subtree_freeze(parent, -1);
  }

  // Replace the parent's index beyond fp with the merged entries, continuing
  // the parent's pre-fp cumulative local counts.
  std::size_t erased = parent_idx.truncate_from(fp);
  std::uint64_t count = fp == 0 ? 0 : parent_idx.local_count_at_or_below(fp - 1);
  for (const LogIndex::Slot& s : merged) {
    parent_idx.append_entry(s.pos, IndexEntry{s.entry.ref, ++count});
  }
  stats_.entries_erased += erased;
  stats_.entries_merged += merged.size();
  stats_.last_promote_touched_entries = erased + merged.size();

  // The parent's tail advances to the child's; re-parented descendants keep
  // their own tails, so this is a point update.
  (void)ltt_.point_add(parent, static_cast<std::int64_t>(child_tail - parent_tail));

  // Re-parent the child's children (both kinds). Their fork points and
  // indexes stay valid: the parent's positional content now equals the
  // child's. In the tour, dropping the child's own markers splices its
  // continuous subtrees directly under the parent.
  std::vector<LogId> kids = children_of(cmd.child);
  children_.erase(cmd.child);
  for (LogId y : kids) {
    descriptors_.at(y).parent = parent;
    children_[parent].push_back(y);
  }
  std::vector<LogId> inherited_barriers;
  if (auto it = promotable_children_.find(cmd.child); it != promotable_children_.end()) {
    inherited_barriers = it->second;
    promotable_children_.erase(it);
  }
  (void)ltt_.splice_out_markers(cmd.child);
  // Re-apply barriers owed by re-parented promotable grandchildren, now at
  // the parent's level.
  for (LogId y : inherited_barriers) promotable_children_[parent].push_back(y);
  for (std::size_t i = 0; i < inherited_barriers.size(); ++i) {
    (void)ltt_.subtree_freeze(parent, +1);
    for (LogId sibling : promotable_children_[parent]) (void)ltt_.subtree_freeze(sibling, -1);
  }

  erase_child_link(parent, cmd.child);
  descriptors_.at(cmd.child).status = LogStatus::kPromotedAway;
  stats_.entries_erased += indexes_.at(cmd.child).size();
  indexes_.erase(cmd.child);

  res.promoted = true;
  return res;
}

Result<std::vector<ObjectRef>> ForestState::read_meta(LogId log, Position from, Position to,
                                                      ResolveStats* stats) const {
  if (auto err = check_live(log)) return *err;
  if (from > to) return make_error(ErrorCode::kProtocolError, "read range inverted");
  // Blocking is reported before the tail bound so a blocked reader learns the
  // boundary without learning how far the withheld tail has advanced.
  if (auto floor = blocked_floor(log); floor && to > *floor) {
    return make_error(ErrorCode::kBlockedByPromotableFork,
                      "read beyond a pending promote boundary", floor);
  }
  Position tail = ltt_.tail_query(log).take();
  if (to > tail) return make_error(ErrorCode::kPositionOutOfRange, "read beyond tail");
  std::vector<ObjectRef> out;
  out.reserve(to - from);
  for (Position p = from; p < to; ++p) {
    auto r = resolve(log, p, *this, stats);
    if (!r.ok()) return r.error();
    out.push_back(r.take());
  }
  return out;
}

Result<TailInfo> ForestState::get_tail(LogId log) const {
  if (auto err = check_live(log)) return *err;
  Position tail = ltt_.tail_query(log).take();
  return TailInfo{tail, blocked_floor(log).has_value()};
}

Result<ObjectRef> ForestState::resolve_internal(LogId log, Position pos,
                                                ResolveStats* stats) const {
  if (auto err = check_live(log)) return *err;
  Position tail = ltt_.tail_query(log).take();
  if (pos >= tail) return make_error(ErrorCode::kPositionOutOfRange, "position beyond tail");
  return resolve(log, pos, *this, stats);
}

Result<Position> ForestState::tail_internal(LogId log) const {
  if (auto err = check_live(log)) return *err;
  return ltt_.tail_query(log).take();
}

std::uint64_t ForestState::total_index_entries() const {
  std::uint64_t n = 0;
  for (const auto& [id, idx] : indexes_) n += idx.size();
  return n;
}

std::uint64_t ForestState::fingerprint() const {
  Fnv64 h;
  for (const auto& [id, d] : descriptors_) {
    h.u64(id);
    h.u8(static_cast<std::uint8_t>(d.kind));
    h.u64(d.parent);
    h.u8(d.fork_point.has_value() ? 1 : 0);
    h.u64(d.fork_point.value_or(0));
    h.u8(d.promotable ? 1 : 0);
    h.u8(static_cast<std::uint8_t>(d.status));
  }
  for (const auto& [id, idx] : indexes_) {
    h.u64(id);
    h.u64(idx.size());
    for (const LogIndex::Slot& s : idx.slots()) {
      h.u64(s.pos);
      h.u64(s.entry.ref.object.hi);
      h.u64(s.entry.ref.object.lo);
      h.u64(s.entry.ref.offset);
      h.u64(s.entry.ref.length);
      h.u64(s.entry.local_count);
    }
  }
  for (const auto& [id, d] : descriptors_) {
    if (d.live()) {
      h.u64(id);
      h.u64(ltt_.tail_query(id).take());
    }
  }
  for (LogId id : race_lost_) h.u64(id);
  h.u64(next_id_);
  return h.value();
}

std::vector<std::uint8_t> ForestState::serialize() const {
  ByteWriter w;
  w.u64(next_id_);
  w.u32(static_cast<std::uint32_t>(descriptors_.size()));
  for (const auto& [id, d] : descriptors_) {
    w.u64(id);
    w.u8(static_cast<std::uint8_t>(d.kind));
    w.u64(d.parent);
    w.u8(d.fork_point.has_value() ? 1 : 0);
    w.u64(d.fork_point.value_or(0));
    w.u8(d.promotable ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(d.status));
  }
  w.u32(static_cast<std::uint32_t>(race_lost_.size()));
  for (LogId id : race_lost_) w.u64(id);
  w.u32(static_cast<std::uint32_t>(indexes_.size()));
  for (const auto& [id, idx] : indexes_) {
    w.u64(id);
    w.u32(static_cast<std::uint32_t>(idx.size()));
    for (const LogIndex::Slot& s : idx.slots()) {
      w.u64(s.pos);
      w.u64(s.entry.ref.object.hi);
      w.u64(s.entry.ref.object.lo);
      w.u64(s.entry.ref.offset);
      w.u64(s.entry.ref.length);
      w.u64(s.entry.local_count);
    }
  }
  std::uint32_t live = 0;
  for (const auto& [id, d] : descriptors_) {
    if (d.live()) ++live;
  }
  w.u32(live);
  for (const auto& [id, d] : descriptors_) {
    if (d.live()) {
      w.u64(id);
      w.u64(ltt_.tail_query(id).take());
    }
  }
  w.u64(stats_.records_sequenced);
  w.u64(stats_.entries_merged);
  w.u64(stats_.entries_erased);
  return w.take();
}

Result<ForestState> ForestState::deserialize(std::span<const std::uint8_t> blob) {
  auto bad = [] { return make_error(ErrorCode::kProtocolError, "snapshot blob truncated"); };
  ByteReader r(blob);
  ForestState st(0);
  if (!r.u64(&st.next_id_)) return bad();
  std::uint32_t ndesc = 0;
  if (!r.u32(&ndesc)) return bad();
  for (std::uint32_t i = 0; i < ndesc; ++i) {
    LogDescriptor d;
    std::uint8_t kind = 0;
    std::uint8_t has_fp = 0;
    std::uint64_t fp = 0;
    std::uint8_t promotable = 0;
    std::uint8_t status = 0;
    if (!r.u64(&d.id) || !r.u8(&kind) || !r.u64(&d.parent) || !r.u8(&has_fp) || !r.u64(&fp) ||
        !r.u8(&promotable) || !r.u8(&status)) {
      return bad();
    }
    d.kind = static_cast<LogKind>(kind);
    if (has_fp) d.fork_point = fp;
    d.promotable = promotable != 0;
    d.status = static_cast<LogStatus>(status);
    st.descriptors_.emplace(d.id, d);
  }
  std::uint32_t nlost = 0;
  if (!r.u32(&nlost)) return bad();
  for (std::uint32_t i = 0; i < nlost; ++i) {
    LogId id = 0;
    if (!r.u64(&id)) return bad();
    st.race_lost_.insert(id);
  }
  std::uint32_t nidx = 0;
  if (!r.u32(&nidx)) return bad();
  for (std::uint32_t i = 0; i < nidx; ++i) {
    LogId id = 0;
    std::uint32_t nslots = 0;
    if (!r.u64(&id) || !r.u32(&nslots)) return bad();
    LogIndex idx(id);
    for (std::uint32_t k = 0; k < nslots; ++k) {
      Position pos = 0;
      IndexEntry e;
      if (!r.u64(&pos) || !r.u64(&e.ref.object.hi) || !r.u64(&e.ref.object.lo) ||
          !r.u64(&e.ref.offset) || !r.u64(&e.ref.length) || !r.u64(&e.local_count)) {
        return bad();
      }
      idx.append_entry(pos, e);
    }
    st.indexes_.emplace(id, std::move(idx));
  }
  std::uint32_t nlive = 0;
  if (!r.u32(&nlive)) return bad();
  std::map<LogId, Position> tails;
  for (std::uint32_t i = 0; i < nlive; ++i) {
    LogId id = 0;
    Position t = 0;
    if (!r.u64(&id) || !r.u64(&t)) return bad();
    tails[id] = t;
  }
  if (!r.u64(&st.stats_.records_sequenced) || !r.u64(&st.stats_.entries_merged) ||
      !r.u64(&st.stats_.entries_erased)) {
    return bad();
  }
  // Rebuild the derived structures. Ids are assigned parent-before-child, so
  // id order is a valid insertion order for the tour.
  for (const auto& [id, t] : tails) {
    const LogDescriptor& d = st.descriptors_.at(id);
    if (d.kind == LogKind::kCFork) {
      (void)st.ltt_.insert_child(d.parent, id, t);
    } else {
      st.ltt_.insert_root(id, t);
    }
    if (d.parent != kNoLog) st.children_[d.parent].push_back(id);
    if (d.kind == LogKind::kCFork && d.promotable) st.promotable_children_[d.parent].push_back(id);
  }
  for (const auto& [parent, kids] : st.promotable_children_) {
    for (std::size_t i = 0; i < kids.size(); ++i) {
      (void)st.ltt_.subtree_freeze(parent, +1);
      for (LogId c : kids) (void)st.ltt_.subtree_freeze(c, -1);
    }
  }
  return st;
}

}  // namespace bolt
