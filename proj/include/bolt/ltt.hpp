#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// Lazy tail tree: the Euler tour of the inheritance forest kept in one
// balanced search tree (a treap keyed implicitly by tour order). Every live
// log owns an entry/exit marker pair and a log's subtree occupies the
// contiguous marker range [entry, exit], so a subtree tail update or freeze
// becomes a lazy range update and a tail read a point query, both logarithmic
// in the number of live logs.
//
// Tail and freeze values are stored on entry markers only; exit markers are
// structural. Lazy tags push down on structural descent (split/merge), and
// point queries read a marker's value plus the pending tags on its root path.
//
// All tours live in one sequence: independent trees occupy disjoint ranges.
class TailTree {
 public:
  TailTree();
  ~TailTree();
  TailTree(const TailTree&) = delete;
  TailTree& operator=(const TailTree&) = delete;
  TailTree(TailTree&& other) noexcept;
  TailTree& operator=(TailTree&& other) noexcept;

  bool contains(LogId log) const { return handles_.count(log) != 0; }
  std::size_t live_count() const { return handles_.size(); }

  // Starts a new tour with this log as its root (roots and sForks).
  void insert_root(LogId log, Position initial_tail);

  // Splices the child's marker pair immediately before the parent's exit
  // marker (appended last among siblings; sibling order is not meaningful).
  Status insert_child(LogId parent, LogId child, Position initial_tail);

  // Adds delta to the effective tail of every log in the subtree.
  Status subtree_add(LogId log, std::int64_t delta);

  // Adds delta to this log's tail only.
  Status point_add(LogId log, std::int64_t delta);

  Result<Position> tail_query(LogId log) const;

  // Adjusts the freeze counter of the whole subtree.
  Status subtree_freeze(LogId log, std::int64_t delta);

  Result<bool> frozen_query(LogId log) const;
  Result<std::int64_t> freeze_count(LogId log) const;

  // Detaches the contiguous range [entry(log), exit(log)], discarding pending
  // tags on it. Returns every removed log in tour (depth-first) order.
  Result<std::vector<LogId>> remove_subtree(LogId log);

  // Removes only this log's own markers; descendant ranges stay in place and
  // become children of the log's tour parent.
  Status splice_out_markers(LogId log);

  // Instrumentation: distinct nodes touched since the last reset.
  void reset_touch_window();
  std::uint64_t touched_in_window() const { return touched_; }

  struct TourStep {
    LogId log;
    bool is_entry;
  };
  // Full marker sequence, for structural tests.
  std::vector<TourStep> tour() const;

 private:
  struct Node;

  Node* make_node(LogId log, bool is_entry) const;
  void touch(Node* n) const;
  void push_down(Node* n) const;
  static void apply_tag(Node* n, std::int64_t add, std::int64_t frz);
  void upd(Node* n) const;
  static std::uint32_t size_of(const Node* n);
  std::size_t index_of(Node* n) const;
  std::pair<Node*, Node*> split(Node* t, std::size_t left_count) const;
  Node* merge(Node* a, Node* b) const;
  // Detaches the 1-based inclusive range [i, j]; remainder becomes the root.
  Node* extract_range(std::size_t i, std::size_t j);
  static void free_tree(Node* n);

  mutable Node* root_ = nullptr;
  std::unordered_map<LogId, std::pair<Node*, Node*>> handles_;
  mutable std::mt19937_64 prio_rng_;
  mutable std::uint64_t epoch_ = 1;
  mutable std::uint64_t touched_ = 0;
};

}  // namespace bolt
