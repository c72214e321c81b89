#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "bolt/ltt.hpp"

using namespace bolt;

namespace {

// Eager per-node reference model: a plain forest with tails and freeze
// counters updated by walking subtrees.
struct EagerModel {
  struct Node {
    Position tail = 0;
    std::int64_t freeze = 0;
    LogId parent = kNoLog;
    std::vector<LogId> children;
  };
  std::map<LogId, Node> nodes;

  void insert_root(LogId id, Position tail) { nodes[id] = Node{tail, 0, kNoLog, {}}; }
  void insert_child(LogId parent, LogId id, Position tail) {
    nodes[id] = Node{tail, 0, parent, {}};
    nodes[parent].children.push_back(id);
  }
  void visit(LogId id, auto&& fn) {
    fn(nodes[id]);
    for (LogId c : nodes[id].children) visit(c, fn);
  }
  void subtree_add(LogId id, std::int64_t d) {
    visit(id, [d](Node& n) { n.tail += static_cast<Position>(d); });
  }
  void subtree_freeze(LogId id, std::int64_t d) {
    visit(id, [d](Node& n) { n.freeze += d; });
  }
  std::vector<LogId> remove_subtree(LogId id) {
    std::vector<LogId> removed;
    collect(id, &removed);
    auto& siblings = nodes[nodes[id].parent].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));
    for (LogId r : removed) nodes.erase(r);
    return removed;
  }
  void collect(LogId id, std::vector<LogId>* out) {
    out->push_back(id);
    for (LogId c : nodes[id].children) collect(c, out);
  }
};

}  // namespace

TEST_CASE("root insertion and point queries") {
  TailTree t;
  t.insert_root(1, 0);
  CHECK(t.tail_query(1).value() == 0);
  t.insert_root(2, 2);  // severed fork from past offset 1 starts at 2
  CHECK(t.tail_query(2).value() == 2);
  REQUIRE(t.subtree_add(1, 1).is_ok());
  REQUIRE(t.subtree_add(1, 1).is_ok());
  REQUIRE(t.subtree_add(1, 1).is_ok());
  CHECK(t.tail_query(1).value() == 3);
  CHECK(t.tail_query(2).value() == 2);  // tours are disjoint
  CHECK_FALSE(t.tail_query(99).ok());
}

TEST_CASE("subtree adds propagate to children lazily") {
  TailTree t;
  t.insert_root(1, 1);            // G with tail 1
  REQUIRE(t.insert_child(1, 2, 1).is_ok());  // R forked at 1
  REQUIRE(t.subtree_add(2, 1).is_ok());      // r0 appended to R
  CHECK(t.tail_query(2).value() == 2);
  REQUIRE(t.subtree_add(1, 1).is_ok());      // g1 appended to G
  CHECK(t.tail_query(1).value() == 2);
  CHECK(t.tail_query(2).value() == 3);
  REQUIRE(t.subtree_add(2, 1).is_ok());      // r1
  REQUIRE(t.subtree_add(1, 1).is_ok());      // g2
  CHECK(t.tail_query(1).value() == 3);
  CHECK(t.tail_query(2).value() == 5);
}

TEST_CASE("children splice before the parent exit marker") {
  TailTree t;
  t.insert_root(1, 0);
  REQUIRE(t.insert_child(1, 2, 0).is_ok());
  REQUIRE(t.insert_child(2, 3, 0).is_ok());
  REQUIRE(t.insert_child(1, 4, 0).is_ok());
  auto tour = t.tour();
  // Depth-first: 1 ( 2 ( 3 ) 4 ) with entry/exit pairs.
  std::vector<std::pair<LogId, bool>> expect = {
      {1, true}, {2, true}, {3, true}, {3, false}, {2, false}, {4, true}, {4, false}, {1, false}};
  REQUIRE(tour.size() == expect.size());
  for (std::size_t i = 0; i < tour.size(); ++i) {
    CHECK(tour[i].log == expect[i].first);
    CHECK(tour[i].is_entry == expect[i].second);
  }
  // k children + parent all grow under one subtree add.
  REQUIRE(t.subtree_add(1, 1).is_ok());
  for (LogId id : {1, 2, 3, 4}) CHECK(t.tail_query(id).value() == 1);
  // A leaf add stays a point update.
  REQUIRE(t.subtree_add(4, 1).is_ok());
  CHECK(t.tail_query(4).value() == 2);
  CHECK(t.tail_query(1).value() == 1);
}

TEST_CASE("freeze counters support exemptions and return to zero") {
  TailTree t;
  t.insert_root(1, 0);
  REQUIRE(t.insert_child(1, 2, 0).is_ok());  // promotable child
  REQUIRE(t.insert_child(1, 3, 0).is_ok());  // non-promotable sibling
  REQUIRE(t.subtree_freeze(1, +1).is_ok());
  REQUIRE(t.subtree_freeze(2, -1).is_ok());
  CHECK(t.frozen_query(1).value());
  CHECK_FALSE(t.frozen_query(2).value());
  CHECK(t.frozen_query(3).value());
  REQUIRE(t.subtree_freeze(2, +1).is_ok());
  REQUIRE(t.subtree_freeze(1, -1).is_ok());
  for (LogId id : {1, 2, 3}) CHECK(t.freeze_count(id).value() == 0);
}

TEST_CASE("subtree removal detaches the whole range and nothing else") {
  TailTree t;
  t.insert_root(1, 0);
  REQUIRE(t.insert_child(1, 2, 0).is_ok());
  REQUIRE(t.insert_child(2, 3, 0).is_ok());
  REQUIRE(t.insert_child(3, 4, 0).is_ok());
  REQUIRE(t.insert_child(2, 5, 0).is_ok());
  REQUIRE(t.insert_child(1, 6, 0).is_ok());
  REQUIRE(t.subtree_add(1, 4).is_ok());

  auto removed = t.remove_subtree(2);
  REQUIRE(removed.ok());
  CHECK(removed.value() == std::vector<LogId>{2, 3, 4, 5});
  CHECK_FALSE(t.tail_query(3).ok());
  CHECK(t.tail_query(1).value() == 4);
  CHECK(t.tail_query(6).value() == 4);

  auto leaf = t.remove_subtree(6);
  REQUIRE(leaf.ok());
  CHECK(leaf.value() == std::vector<LogId>{6});
}

TEST_CASE("splicing out markers re-parents the children ranges") {
  TailTree t;
  t.insert_root(1, 0);
  REQUIRE(t.insert_child(1, 2, 0).is_ok());
  REQUIRE(t.insert_child(2, 3, 5).is_ok());
  REQUIRE(t.insert_child(2, 4, 7).is_ok());
  REQUIRE(t.splice_out_markers(2).is_ok());
  CHECK_FALSE(t.tail_query(2).ok());
  CHECK(t.tail_query(3).value() == 5);
  CHECK(t.tail_query(4).value() == 7);
  // 3 and 4 now sit directly under 1.
  REQUIRE(t.subtree_add(1, 2).is_ok());
  CHECK(t.tail_query(3).value() == 7);
  CHECK(t.tail_query(4).value() == 9);
}

TEST_CASE("matches the eager per-node model over random operation sequences") {
  std::mt19937_64 rng(1234);
  TailTree t;
  EagerModel m;
  std::vector<LogId> live;
  LogId next = 1;

  auto new_root = [&] {
    LogId id = next++;
    t.insert_root(id, rng() % 10);
    m.insert_root(id, 0);
    m.nodes[id].tail = t.tail_query(id).value();
    live.push_back(id);
  };
  new_root();

  for (int step = 0; step < 10000; ++step) {
    switch (rng() % 6) {
      case 0: {
        if (live.size() > 400) break;
        new_root();
        break;
      }
      case 1: {
        if (live.size() > 400) break;
        LogId parent = live[rng() % live.size()];
        LogId id = next++;
        Position tail = rng() % 10;
        REQUIRE(t.insert_child(parent, id, tail).is_ok());
        m.insert_child(parent, id, tail);
        live.push_back(id);
        break;
      }
      case 2: {
        LogId target = live[rng() % live.size()];
        std::int64_t d = static_cast<std::int64_t>(rng() % 5);
        REQUIRE(t.subtree_add(target, d).is_ok());
        m.subtree_add(target, d);
        break;
      }
      case 3: {
        LogId target = live[rng() % live.size()];
        REQUIRE(t.subtree_freeze(target, +1).is_ok());
        m.subtree_freeze(target, +1);
        // Immediately queue the inverse on a random smaller scope half the
        // time so counters wander but stay non-negative at the roots of the
        // frozen ranges.
        if (rng() % 2) {
          REQUIRE(t.subtree_freeze(target, -1).is_ok());
          m.subtree_freeze(target, -1);
        }
        break;
      }
      case 4: {
        if (live.size() < 3) break;
        LogId target = live[rng() % live.size()];
        if (m.nodes[target].parent == kNoLog) break;  // keep roots
        auto removed = t.remove_subtree(target);
        REQUIRE(removed.ok());
        auto expect = m.remove_subtree(target);
        CHECK(removed.value() == expect);
        for (LogId r : removed.value()) live.erase(std::find(live.begin(), live.end(), r));
        break;
      }
      default: {
        LogId target = live[rng() % live.size()];
        CHECK(t.tail_query(target).value() == m.nodes[target].tail);
        CHECK(t.freeze_count(target).value() == m.nodes[target].freeze);
        break;
      }
    }
  }
  for (LogId id : live) {
    CHECK(t.tail_query(id).value() == m.nodes[id].tail);
    CHECK(t.freeze_count(id).value() == m.nodes[id].freeze);
  }
}

TEST_CASE("operation cost stays logarithmic in the number of live logs") {
  TailTree t;
  t.insert_root(1, 0);
  // Deep chain of 1000 plus wide fan-out of 1000.
  LogId next = 2;
  LogId tip = 1;
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(t.insert_child(tip, next, 0).is_ok());
    tip = next++;
  }
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(t.insert_child(1, next++, 0).is_ok());
  }
  double n = static_cast<double>(t.live_count());
  double bound = 8.0 * std::log2(n) + 8.0;

  std::mt19937_64 rng(99);
  std::uint64_t worst = 0;
  for (int i = 0; i < 2000; ++i) {
    LogId target = 1 + rng() % (next - 1);
    if (!t.contains(target)) continue;
    t.reset_touch_window();
    REQUIRE(t.subtree_add(target, 1).is_ok());
    (void)t.tail_query(target);
    worst = std::max(worst, t.touched_in_window());
  }
  CHECK(static_cast<double>(worst) <= bound);
  MESSAGE("worst touched: ", worst, " bound: ", bound);
}
