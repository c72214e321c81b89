#include "bolt/ltt.hpp"

#include <cassert>

namespace bolt {

struct TailTree::Node {
  Node* l = nullptr;
  Node* r = nullptr;
  Node* p = nullptr;
  std::uint64_t prio = 0;
  std::uint32_t sz = 1;
  bool is_entry = false;
  LogId log = kNoLog;
  std::int64_t tail_v = 0;    // entry markers only
  std::int64_t frz_v = 0;     // entry markers only
  std::int64_t pend_add = 0;  // owed by both children's subtrees
  std::int64_t pend_frz = 0;
  std::uint64_t epoch = 0;    // touch-window bookkeeping
};

TailTree::TailTree() : prio_rng_(0x00C0FFEEu) {}

TailTree::~TailTree() { free_tree(root_); }

TailTree::TailTree(TailTree&& other) noexcept
    : root_(other.root_),
      handles_(std::move(other.handles_)),
      prio_rng_(other.prio_rng_),
      epoch_(other.epoch_),
      touched_(other.touched_) {
  other.root_ = nullptr;
  other.handles_.clear();
}

TailTree& TailTree::operator=(TailTree&& other) noexcept {
  if (this != &other) {
    free_tree(root_);
    root_ = other.root_;
    handles_ = std::move(other.handles_);
    prio_rng_ = other.prio_rng_;
    epoch_ = other.epoch_;
    touched_ = other.touched_;
    other.root_ = nullptr;
    other.handles_.clear();
  }
  return *this;
}

void TailTree::free_tree(Node* n) {
  if (!n) return;
  free_tree(n->l);
  free_tree(n->r);
  delete n;
}

TailTree::Node* TailTree::make_node(LogId log, bool is_entry) const {
  Node* n = new Node();
  n->prio = prio_rng_();
  n->is_entry = is_entry;
  n->log = log;
  touch(n);
  return n;
}

void TailTree::touch(Node* n) const {
  if (n->epoch != epoch_) {
    n->epoch = epoch_;
    ++touched_;
  }
}

void TailTree::reset_touch_window() {
  ++epoch_;
  touched_ = 0;
}

std::uint32_t TailTree::size_of(const Node* n) { return n ? n->sz : 0; }

void TailTree::apply_tag(Node* n, std::int64_t add, std::int64_t frz) {
  if (n->is_entry) {
    n->tail_v += add;
    n->frz_v += frz;
  }
  n->pend_add += add;
  n->pend_frz += frz;
}

void TailTree::push_down(Node* n) const {
  touch(n);
  if (n->pend_add == 0 && n->pend_frz == 0) return;
  if (n->l) {
    touch(n->l);
    apply_tag(n->l, n->pend_add, n->pend_frz);
  }
  if (n->r) {
    touch(n->r);
    apply_tag(n->r, n->pend_add, n->pend_frz);
  }
  n->pend_add = 0;
  n->pend_frz = 0;
}

void TailTree::upd(Node* n) const {
  n->sz = 1 + size_of(n->l) + size_of(n->r);
  if (n->l) n->l->p = n;
  if (n->r) n->r->p = n;
}

std::size_t TailTree::index_of(Node* n) const {
  touch(n);
  std::size_t pos = size_of(n->l) + 1;
  for (Node* c = n; c->p; c = c->p) {
    touch(c->p);
    if (c == c->p->r) pos += size_of(c->p->l) + 1;
  }
  return pos;
}

std::pair<TailTree::Node*, TailTree::Node*> TailTree::split(Node* t, std::size_t left_count) const {
  if (!t) return {nullptr, nullptr};
  push_down(t);
  if (size_of(t->l) >= left_count) {
    auto [a, b] = split(t->l, left_count);
    t->l = b;
    upd(t);
    t->p = nullptr;
    if (a) a->p = nullptr;
    return {a, t};
  }
  auto [a, b] = split(t->r, left_count - size_of(t->l) - 1);
  t->r = a;
  upd(t);
  t->p = nullptr;
  if (b) b->p = nullptr;
  return {t, b};
}

TailTree::Node* TailTree::merge(Node* a, Node* b) const {
  if (!a || !b) {
    Node* t = a ? a : b;
    if (t) t->p = nullptr;
    return t;
  }
  touch(a);
  touch(b);
  if (a->prio >= b->prio) {
    push_down(a);
    a->r = merge(a->r, b);
    upd(a);
    a->p = nullptr;
    return a;
  }
  push_down(b);
  b->l = merge(a, b->l);
  upd(b);
  b->p = nullptr;
  return b;
}

TailTree::Node* TailTree::extract_range(std::size_t i, std::size_t j) {
  auto [a, bc] = split(root_, i - 1);
  auto [b, c] = split(bc, j - i + 1);
  root_ = merge(a, c);
  return b;
}

void TailTree::insert_root(LogId log, Position initial_tail) {
  assert(!contains(log));
  Node* e = make_node(log, true);
  e->tail_v = static_cast<std::int64_t>(initial_tail);
  Node* x = make_node(log, false);
  root_ = merge(merge(root_, e), x);
  handles_.emplace(log, std::make_pair(e, x));
}

Status TailTree::insert_child(LogId parent, LogId child, Position initial_tail) {
  auto it = handles_.find(parent);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown parent");
  assert(!contains(child));
  std::size_t j = index_of(it->second.second);  // parent's exit marker
  auto [a, b] = split(root_, j - 1);
  Node* e = make_node(child, true);
  e->tail_v = static_cast<std::int64_t>(initial_tail);
  Node* x = make_node(child, false);
  root_ = merge(merge(merge(a, e), x), b);
  handles_.emplace(child, std::make_pair(e, x));
  return Status::ok();
}

Status TailTree::subtree_add(LogId log, std::int64_t delta) {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  std::size_t i = index_of(it->second.first);
  std::size_t j = index_of(it->second.second);
  Node* m = extract_range(i, j);
  touch(m);
  apply_tag(m, delta, 0);
  auto [a, b] = split(root_, i - 1);
  root_ = merge(merge(a, m), b);
  return Status::ok();
}

Status TailTree::point_add(LogId log, std::int64_t delta) {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  touch(it->second.first);
  it->second.first->tail_v += delta;
  return Status::ok();
}

Result<Position> TailTree::tail_query(LogId log) const {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  Node* n = it->second.first;
  touch(n);
  std::int64_t v = n->tail_v;
  for (Node* a = n->p; a; a = a->p) {
    touch(a);
    v += a->pend_add;
  }
  return static_cast<Position>(v);
}

Status TailTree::subtree_freeze(LogId log, std::int64_t delta) {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  std::size_t i = index_of(it->second.first);
  std::size_t j = index_of(it->second.second);
  Node* m = extract_range(i, j);
  touch(m);
  apply_tag(m, 0, delta);
  auto [a, b] = split(root_, i - 1);
  root_ = merge(merge(a, m), b);
  return Status::ok();
}

Result<std::int64_t> TailTree::freeze_count(LogId log) const {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  Node* n = it->second.first;
  touch(n);
  std::int64_t v = n->frz_v;
  for (Node* a = n->p; a; a = a->p) {
    touch(a);
    v += a->pend_frz;
  }
  return v;
}

Result<bool> TailTree::frozen_query(LogId log) const {
  auto r = freeze_count(log);
  if (!r.ok()) return r.error();
  return r.value() > 0;
}

Result<std::vector<LogId>> TailTree::remove_subtree(LogId log) {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  std::size_t i = index_of(it->second.first);
  std::size_t j = index_of(it->second.second);
  Node* m = extract_range(i, j);
  std::vector<LogId> removed;
  // In-order walk of the detached range; entry markers give depth-first order.
  std::vector<Node*> stack;
  Node* cur = m;
  while (cur || !stack.empty()) {
    while (cur) {
      stack.push_back(cur);
      cur = cur->l;
    }
    cur = stack.back();
    stack.pop_back();
    if (cur->is_entry) removed.push_back(cur->log);
    cur = cur->r;
  }
  for (LogId id : removed) handles_.erase(id);
  free_tree(m);
  return removed;
}

Status TailTree::splice_out_markers(LogId log) {
  auto it = handles_.find(log);
  if (it == handles_.end()) return make_error(ErrorCode::kUnknownLog, "ltt: unknown log");
  Node* entry = it->second.first;
  Node* exit = it->second.second;
  std::size_t i = index_of(entry);
  Node* m = extract_range(i, i);
  assert(m == entry);
  delete m;
  std::size_t j = index_of(exit);
  m = extract_range(j, j);
  assert(m == exit);
  delete m;
  handles_.erase(it);
  return Status::ok();
}

std::vector<TailTree::TourStep> TailTree::tour() const {
  std::vector<TourStep> out;
  std::vector<Node*> stack;
  Node* cur = root_;
  while (cur || !stack.empty()) {
    while (cur) {
      stack.push_back(cur);
      cur = cur->l;
    }
    cur = stack.back();
    stack.pop_back();
    out.push_back(TourStep{cur->log, cur->is_entry});
    cur = cur->r;
  }
  return out;
}

}  // namespace bolt
