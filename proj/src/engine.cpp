#include "bolt/engine.hpp"

#include <filesystem>

namespace bolt {

Result<std::unique_ptr<Engine>> Engine::open(std::unique_ptr<CommandLog> log,
                                             EngineOptions opts) {
  ForestState state(opts.initial_roots);
  std::uint64_t from = 1;
  if (!opts.snapshot_path.empty() && std::filesystem::exists(opts.snapshot_path)) {
    auto snap = read_snapshot_file(opts.snapshot_path);
    if (!snap.ok()) return snap.error();
    auto restored = ForestState::deserialize(snap.value().state_blob);
    if (!restored.ok()) return restored.error();
    if (restored.value().fingerprint() != snap.value().fingerprint) {
      return make_error(ErrorCode::kProtocolError, "snapshot fingerprint mismatch");
    }
    state = restored.take();
    from = snap.value().last_applied + 1;
  }
  if (std::uint64_t first = log->first_sequence(); first != 0 && first > from) {
    return make_error(ErrorCode::kStorageFailure, "command log prefix missing before snapshot");
  }
  auto engine = std::unique_ptr<Engine>(new Engine(std::move(log), std::move(state), opts));
  engine->last_applied_ = from - 1;
  auto replayed = engine->log_->replay(from, [&](std::uint64_t seq, const Command& cmd) {
    engine->state_.apply(cmd);
    engine->last_applied_ = seq;
  });
  if (!replayed.ok()) return replayed.error();
  return engine;
}

ApplyResult Engine::submit(const Command& cmd) {
  std::lock_guard<std::mutex> lock(mu_);
  auto seq = log_->append(cmd);
  if (!seq.ok()) {
    ApplyResult res;
    res.error = seq.error();
    return res;
  }
  ApplyResult res = state_.apply(cmd);
  last_applied_ = seq.value();
  return res;
}

Result<std::vector<ObjectRef>> Engine::read_meta(LogId log, Position from, Position to,
                                                 ResolveStats* stats) const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_.read_meta(log, from, to, stats);
}

Result<TailInfo> Engine::get_tail(LogId log) const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_.get_tail(log);
}

std::uint64_t Engine::fingerprint() const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_.fingerprint();
}

std::uint64_t Engine::last_applied() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_applied_;
}

Status Engine::save_snapshot() {
  std::lock_guard<std::mutex> lock(mu_);
  if (opts_.snapshot_path.empty()) {
    return make_error(ErrorCode::kStorageFailure, "snapshots disabled");
  }
  SnapshotData snap;
  snap.fingerprint = state_.fingerprint();
  snap.last_applied = last_applied_;
  snap.state_blob = state_.serialize();
  if (Status s = write_snapshot_file(opts_.snapshot_path, snap); !s.is_ok()) return s;
  return log_->truncate_prefix(last_applied_);
}

}  // namespace bolt
