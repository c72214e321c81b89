#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bolt/wire.hpp"

namespace bolt {

// Typed client over one connection. Safe for concurrent use from multiple
// threads: requests multiplex on request_id and a reader thread dispatches
// responses to their waiters.
class BoltClient {
 public:
  static Result<std::unique_ptr<BoltClient>> connect(const std::string& host, std::uint16_t port);
  ~BoltClient();
  BoltClient(const BoltClient&) = delete;
  BoltClient& operator=(const BoltClient&) = delete;

  // nullopt = acknowledged with a withheld position.
  Result<std::optional<Position>> append(LogId log, std::span<const std::uint8_t> payload);
  Result<std::vector<std::vector<std::uint8_t>>> read(LogId log, Position from, Position to);
  Result<LogId> cfork(LogId parent, bool promotable = false, bool dedicated = false);
  Result<LogId> sfork(LogId parent, std::optional<Position> past = std::nullopt,
                      bool dedicated = false);
  Status promote(LogId log);
  Result<std::vector<LogId>> squash(LogId log);
  // nullopt = withheld.
  Result<std::optional<Position>> get_tail(LogId log);
  Result<std::vector<LogInfo>> describe();

 private:
  BoltClient() = default;
  void reader_main();
  Result<Response> call(Opcode op, Request req);

  struct Waiter {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    Result<Response> result{EngineError{}};
  };

  int fd_ = -1;
  std::atomic<std::uint64_t> next_id_{1};
  std::mutex write_mu_;
  std::mutex waiters_mu_;
  std::map<std::uint64_t, std::pair<Opcode, std::shared_ptr<Waiter>>> waiters_;
  std::thread reader_;
  std::atomic<bool> closed_{false};
};

}  // namespace bolt
