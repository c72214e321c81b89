#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "bolt/metastate.hpp"
#include "bolt/seqlog.hpp"

namespace bolt {

struct EngineOptions {
  std::uint32_t initial_roots = 1;
  std::string snapshot_path;  // empty: snapshots disabled
};

// Command log + metadata state machine behind one sequential applier.
// Recovery is load-snapshot-if-any plus replay of the command-log suffix.
// Brokers pipeline commands into submit(); queries share the applier lock
// because tail-tree reads are serialized with mutations by contract.
class Engine {
 public:
  static Result<std::unique_ptr<Engine>> open(std::unique_ptr<CommandLog> log,
                                              EngineOptions opts = {});

  // Durably appends the command, then applies it. StorageFailure leaves the
  // state machine untouched.
  ApplyResult submit(const Command& cmd);

  Result<std::vector<ObjectRef>> read_meta(LogId log, Position from, Position to,
                                           ResolveStats* stats = nullptr) const;
  Result<TailInfo> get_tail(LogId log) const;

  std::uint64_t fingerprint() const;
  std::uint64_t last_applied() const;

  // Writes the snapshot file and truncates the covered command-log prefix.
  Status save_snapshot();

  // Runs fn with the state machine under the applier lock.
  template <class F>
  auto with_state(F&& fn) const -> decltype(fn(std::declval<const ForestState&>())) {
    std::lock_guard<std::mutex> lock(mu_);
    return fn(state_);
  }
  template <class F>
  auto with_state_mut(F&& fn) -> decltype(fn(std::declval<ForestState&>())) {
    std::lock_guard<std::mutex> lock(mu_);
    return fn(state_);
  }

 private:
  Engine(std::unique_ptr<CommandLog> log, ForestState state, EngineOptions opts)
      : log_(std::move(log)), state_(std::move(state)), opts_(std::move(opts)) {}

  std::unique_ptr<CommandLog> log_;
  ForestState state_;
  EngineOptions opts_;
  std::uint64_t last_applied_ = 0;
  mutable std::mutex mu_;
};

}  // namespace bolt
