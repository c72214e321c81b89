#include "bolt/harness/workload.hpp"

#include <algorithm>
#include <sstream>

namespace bolt::harness {

namespace {

// Live continuous descendants of log, excluding it.
std::size_t count_cfork_descendants(const VariantEngine& eng, LogId log) {
  std::size_t n = 0;
  for (LogId c : eng.children_of(log)) {
    const LogDescriptor* d = eng.descriptor(c);
    if (d && d->live() && d->kind == LogKind::kCFork) n += 1 + count_cfork_descendants(eng, c);
  }
  return n;
}

std::size_t nesting_depth(const VariantEngine& eng, LogId log) {
  std::size_t depth = 0;
  const LogDescriptor* d = eng.descriptor(log);
  while (d && d->parent != kNoLog) {
    ++depth;
    d = eng.descriptor(d->parent);
  }
  return depth;
}

}  // namespace

RecordedRun generate_workload(VariantEngine& driver, const WorkloadOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  RecordedRun run;
  std::uint64_t payload_cursor = 0;

  auto pick_live = [&](auto pred) -> std::optional<LogId> {
    std::vector<LogId> candidates;
    for (LogId id : driver.live_logs()) {
      if (pred(id)) candidates.push_back(id);
    }
    if (candidates.empty()) return std::nullopt;
    return candidates[rng() % candidates.size()];
  };

  auto submit = [&](Command cmd) {
    ApplyResult res = driver.apply(cmd);
    run.commands.push_back(std::move(cmd));
    run.results.push_back(res);
    return res;
  };

  auto do_append = [&] {
    std::size_t nrecords = 1 + rng() % opts.max_records_per_batch;
    SequenceBatch batch;
    batch.object = ObjectId{rng() | 1, rng() | 1};
    std::uint64_t predicted = 0;
    for (std::size_t i = 0; i < nrecords; ++i) {
      auto target = pick_live([](LogId) { return true; });
      if (!target) return;
      predicted += 1 + count_cfork_descendants(driver, *target);
      batch.records.push_back(SequenceRecord{*target, payload_cursor, 64});
      payload_cursor += 64;
    }
    ApplyResult res = submit(Command{batch});
    if (res.ok()) {
      run.records_appended += batch.records.size();
      run.naive_entry_prediction += predicted;
    }
  };

  auto do_cfork = [&](bool force_deep) {
    std::optional<LogId> parent;
    if (force_deep) {
      // Extend the deepest live chain.
      LogId best = kNoLog;
      std::size_t best_depth = 0;
      for (LogId id : driver.live_logs()) {
        std::size_t d = nesting_depth(driver, id);
        if (best == kNoLog || d > best_depth) {
          best = id;
          best_depth = d;
        }
      }
      if (best != kNoLog) parent = best;
    } else {
      parent = pick_live([](LogId) { return true; });
    }
    if (!parent) return;
    bool promotable =
        std::uniform_real_distribution<double>(0, 1)(rng) < opts.promotable_fraction;
    ApplyResult res = submit(Command{CreateCFork{*parent, promotable}});
    if (res.ok()) {
      ++run.forks_created;
      run.max_nesting = std::max(run.max_nesting, nesting_depth(driver, *res.created));
    }
  };

  auto do_sfork = [&] {
    auto parent = pick_live([](LogId) { return true; });
    if (!parent) return;
    std::optional<Position> past;
    auto tail = driver.tail_internal(*parent);
    if (tail.ok() && tail.value() > 0 && rng() % 2 == 0) {
      past = rng() % tail.value();
    }
    ApplyResult res = submit(Command{CreateSFork{*parent, past}});
    if (res.ok()) {
      ++run.forks_created;
      run.max_nesting = std::max(run.max_nesting, nesting_depth(driver, *res.created));
    }
  };

  auto do_promote = [&] {
    auto target = pick_live([&](LogId id) {
      const LogDescriptor* d = driver.descriptor(id);
      return d->kind == LogKind::kCFork && d->promotable;
    });
    if (!target) return;
    submit(Command{Promote{*target}});
  };

  auto do_squash = [&] {
    auto target = pick_live([&](LogId id) {
      return driver.descriptor(id)->kind != LogKind::kRoot;
    });
    if (!target) return;
    submit(Command{Squash{*target}});
  };

  auto do_invalid = [&] {
    switch (rng() % 4) {
      case 0:  // unknown log
        submit(Command{Squash{LogId{1'000'000'000} + rng() % 1000}});
        break;
      case 1: {  // squash or append to a root (root squash is an error)
        submit(Command{Squash{1}});
        break;
      }
      case 2: {  // promote something non-promotable
        auto target = pick_live([&](LogId id) { return !driver.descriptor(id)->promotable; });
        if (target) submit(Command{Promote{*target}});
        break;
      }
      default: {  // severed fork from a bad past offset
        auto parent = pick_live([](LogId) { return true; });
        if (parent) {
          auto tail = driver.tail_internal(*parent);
          Position past = (tail.ok() ? tail.value() : 0) + 1 + rng() % 10;
          submit(Command{CreateSFork{*parent, past}});
        }
        break;
      }
    }
  };

  // Steering prefix: forced fork shape first so the body of the run exercises
  // it, interleaved with appends to give each level its own records.
  while (run.max_nesting < opts.min_nesting && run.commands.size() < opts.commands) {
    do_append();
    do_cfork(true);
  }
  while (run.forks_created < opts.min_forks && run.commands.size() < opts.commands) {
    do_cfork(false);
    do_append();
  }

  unsigned total_weight = opts.w_append + opts.w_cfork + opts.w_sfork + opts.w_promote +
                          opts.w_squash + opts.w_invalid;
  while (run.commands.size() < opts.commands) {
    unsigned roll = static_cast<unsigned>(rng() % total_weight);
    if (roll < opts.w_append) {
      do_append();
    } else if ((roll -= opts.w_append) < opts.w_cfork) {
      do_cfork(false);
    } else if ((roll -= opts.w_cfork) < opts.w_sfork) {
      do_sfork();
    } else if ((roll -= opts.w_sfork) < opts.w_promote) {
      do_promote();
    } else if ((roll -= opts.w_promote) < opts.w_squash) {
      do_squash();
    } else {
      do_invalid();
    }
  }
  return run;
}

std::vector<ApplyResult> replay_run(VariantEngine& engine, const RecordedRun& run) {
  std::vector<ApplyResult> out;
  out.reserve(run.commands.size());
  for (const Command& cmd : run.commands) out.push_back(engine.apply(cmd));
  return out;
}

bool results_equal(const ApplyResult& a, const ApplyResult& b, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.ok() != b.ok()) return fail("one side errored");
  if (!a.ok()) {
    if (a.error->code != b.error->code) {
      return fail(std::string("error codes differ: ") + to_string(a.error->code) + " vs " +
                  to_string(b.error->code));
    }
    if (a.error->boundary != b.error->boundary) return fail("error boundaries differ");
    return true;
  }
  if (a.positions.size() != b.positions.size()) return fail("ack counts differ");
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    if (a.positions[i].position != b.positions[i].position ||
        a.positions[i].withheld != b.positions[i].withheld) {
      return fail("ack " + std::to_string(i) + " differs");
    }
  }
  if (a.created != b.created) return fail("created ids differ");
  if (a.promoted != b.promoted) return fail("promoted flags differ");
  std::vector<LogId> sa = a.squashed;
  std::vector<LogId> sb = b.squashed;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) return fail("squashed sets differ");
  return true;
}

DifferentialReport run_differential(const WorkloadOptions& opts) {
  DifferentialReport report;
  LazyVariant lazy(opts.initial_roots);
  RecordedRun run = generate_workload(lazy, opts);
  report.commands = run.commands.size();
  report.forks_created = run.forks_created;
  report.max_nesting = run.max_nesting;

  EagerVariant eager(false, opts.initial_roots);
  EagerVariant naive(true, opts.initial_roots);
  std::vector<ApplyResult> eager_results = replay_run(eager, run);
  std::vector<ApplyResult> naive_results = replay_run(naive, run);

  auto diverge = [&](std::size_t cmd, const std::string& who, const std::string& what) {
    std::ostringstream os;
    os << "command " << cmd << " vs " << who << ": " << what;
    report.divergence = os.str();
    return report;
  };

  for (std::size_t i = 0; i < run.commands.size(); ++i) {
    std::string why;
    if (!results_equal(run.results[i], eager_results[i], &why)) {
      return diverge(i, "eager_tail", why);
    }
    if (!results_equal(run.results[i], naive_results[i], &why)) {
      return diverge(i, "naive_cf", why);
    }
  }

  std::vector<LogId> live = lazy.live_logs();
  for (const VariantEngine* other :
       {static_cast<const VariantEngine*>(&eager), static_cast<const VariantEngine*>(&naive)}) {
    if (other->live_logs() != live) {
      report.divergence = "live log sets differ";
      return report;
    }
  }
  for (LogId log : live) {
    Position tail = lazy.tail_internal(log).take();
    auto w = lazy.get_tail(log);
    for (const VariantEngine* other :
         {static_cast<const VariantEngine*>(&eager), static_cast<const VariantEngine*>(&naive)}) {
      auto t2 = other->tail_internal(log);
      if (!t2.ok() || t2.value() != tail) {
        std::ostringstream os;
        os << "tail of log " << log << " differs";
        report.divergence = os.str();
        return report;
      }
      auto w2 = other->get_tail(log);
      if (w2.value().withheld != w.value().withheld) {
        report.divergence = "withheld flag differs on log " + std::to_string(log);
        return report;
      }
    }
    for (Position p = 0; p < tail; ++p) {
      auto r0 = lazy.resolve_internal(log, p);
      auto r1 = eager.resolve_internal(log, p);
      auto r2 = naive.resolve_internal(log, p);
      bool same = r0.ok() == r1.ok() && r0.ok() == r2.ok() &&
                  (!r0.ok() || (r0.value() == r1.value() && r0.value() == r2.value()));
      if (!same) {
        std::ostringstream os;
        os << "resolve(" << log << ", " << p << ") differs";
        report.divergence = os.str();
        return report;
      }
    }
    // Blocking parity on the read path.
    auto b0 = lazy.read_meta(log, 0, tail);
    auto b1 = eager.read_meta(log, 0, tail);
    auto b2 = naive.read_meta(log, 0, tail);
    bool same_block = b0.ok() == b1.ok() && b0.ok() == b2.ok() &&
                      (b0.ok() || (b0.error().code == b1.error().code &&
                                   b0.error().code == b2.error().code &&
                                   b0.error().boundary == b1.error().boundary &&
                                   b0.error().boundary == b2.error().boundary));
    if (!same_block) {
      report.divergence = "read blocking differs on log " + std::to_string(log);
      return report;
    }
  }

  report.ok = true;
  report.live_logs = live.size();
  report.lazy_entries = lazy.index_entries();
  report.eager_entries = eager.index_entries();
  report.naive_entries = naive.index_entries();
  return report;
}

}  // namespace bolt::harness
