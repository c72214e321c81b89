#pragma once

#include <map>
#include <memory>
#include <set>

#include "bolt/metastate.hpp"

namespace bolt::harness {

enum class Variant {
  kLazy,       // the real engine: hierarchical index + lazy tail tree
  kEagerTail,  // tail-only updates, applied eagerly per descendant
  kNaiveCF,    // parent appends copied into every descendant's index
};

const char* to_string(Variant v);

// Uniform command interface over the engine and its ablation oracles, so
// differential runs can drive all of them with one recorded sequence.
class VariantEngine {
 public:
  virtual ~VariantEngine() = default;

  virtual ApplyResult apply(const Command& cmd) = 0;
  virtual Result<TailInfo> get_tail(LogId log) const = 0;
  virtual Result<std::vector<ObjectRef>> read_meta(LogId log, Position from,
                                                   Position to) const = 0;
  virtual Result<ObjectRef> resolve_internal(LogId log, Position pos) const = 0;
  virtual Result<Position> tail_internal(LogId log) const = 0;
  virtual std::vector<LogId> live_logs() const = 0;
  virtual const LogDescriptor* descriptor(LogId log) const = 0;
  virtual std::vector<LogId> children_of(LogId log) const = 0;
  virtual std::uint64_t index_entries() const = 0;
  // Cost of the most recent single-record append: distinct tail-tree nodes
  // for the lazy engine, tail updates performed for the eager oracles.
  virtual std::uint64_t last_append_touched() const = 0;
};

std::unique_ptr<VariantEngine> make_variant(Variant v, std::uint32_t initial_roots = 1);

class LazyVariant final : public VariantEngine {
 public:
  explicit LazyVariant(std::uint32_t initial_roots = 1) : st_(initial_roots) {}

  ApplyResult apply(const Command& cmd) override { return st_.apply(cmd); }
  Result<TailInfo> get_tail(LogId log) const override { return st_.get_tail(log); }
  Result<std::vector<ObjectRef>> read_meta(LogId log, Position from, Position to) const override {
    return st_.read_meta(log, from, to);
  }
  Result<ObjectRef> resolve_internal(LogId log, Position pos) const override {
    return st_.resolve_internal(log, pos);
  }
  Result<Position> tail_internal(LogId log) const override { return st_.tail_internal(log); }
  std::vector<LogId> live_logs() const override { return st_.live_logs(); }
  const LogDescriptor* descriptor(LogId log) const override { return st_.find_descriptor(log); }
  std::vector<LogId> children_of(LogId log) const override { return st_.children_of(log); }
  std::uint64_t index_entries() const override { return st_.total_index_entries(); }
  std::uint64_t last_append_touched() const override {
    const auto& v = st_.stats().last_batch_ltt_touched;
    return v.empty() ? 0 : v.back();
  }

  ForestState& state() { return st_; }
  const ForestState& state() const { return st_; }

 private:
  ForestState st_;
};

// Shared skeleton for the two eager oracles. Indexes are plain ordered maps,
// tails and freeze counters are stored per log and updated by walking the
// inheritance subtree eagerly; in copy-entries mode every parent append is
// also copied into each continuous descendant's index.
class EagerVariant final : public VariantEngine {
 public:
  EagerVariant(bool copy_entries, std::uint32_t initial_roots = 1);

  ApplyResult apply(const Command& cmd) override;
  Result<TailInfo> get_tail(LogId log) const override;
  Result<std::vector<ObjectRef>> read_meta(LogId log, Position from, Position to) const override;
  Result<ObjectRef> resolve_internal(LogId log, Position pos) const override;
  Result<Position> tail_internal(LogId log) const override;
  std::vector<LogId> live_logs() const override;
  const LogDescriptor* descriptor(LogId log) const override;
  std::vector<LogId> children_of(LogId log) const override;
  std::uint64_t index_entries() const override { return entries_; }
  std::uint64_t last_append_touched() const override { return last_touched_; }

  // Sorted slot array; positions only grow, so every insert appends.
  struct ESlot {
    Position pos;
    IndexEntry entry;
  };

 private:
  struct ELog {
    LogDescriptor desc;
    Position tail = 0;
    std::int64_t freeze = 0;
    // local_count counts locally appended records at or below each key; in
    // copy-entries mode inherited copies repeat the previous count.
    std::vector<ESlot> index;
    std::vector<LogId> children;  // live, creation order
  };

  ELog* live(LogId log);
  const ELog* live(LogId log) const;
  std::optional<EngineError> check_live(LogId log) const;
  void collect_subtree(LogId log, std::vector<LogId>* out) const;  // cFork subtree incl self
  void freeze_subtree(LogId log, std::int64_t delta);
  std::size_t promotable_count(LogId log) const;
  std::optional<Position> earliest_fp(LogId log) const;
  std::int64_t ancestor_freeze(LogId log) const;
  std::optional<Position> blocked_floor(LogId log) const;
  Position barrier_in_child(const ELog& child, Position parent_pos) const;
  std::uint64_t local_count_at_or_below(const ELog& log, Position pos) const;
  void internal_squash(LogId log, std::vector<LogId>* out);
  Result<ObjectRef> do_resolve(LogId log, Position pos) const;

  ApplyResult apply_sequence(const SequenceBatch& cmd);
  ApplyResult apply_create_cfork(const CreateCFork& cmd);
  ApplyResult apply_create_sfork(const CreateSFork& cmd);
  ApplyResult apply_promote(const Promote& cmd);
  ApplyResult apply_squash(const Squash& cmd);

  bool copy_entries_;
  LogId next_id_ = 1;
  std::map<LogId, ELog> logs_;             // live
  std::map<LogId, LogDescriptor> dead_;    // squashed / promoted-away
  std::set<LogId> race_lost_;
  std::uint64_t entries_ = 0;
  std::uint64_t last_touched_ = 0;
};

}  // namespace bolt::harness
