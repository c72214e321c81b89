#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bolt/broker.hpp"
#include "bolt/engine.hpp"
#include "bolt/wire.hpp"

namespace bolt {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = ephemeral
  std::string store = "mem";  // "mem" or "fs:<dir>"
  std::string cmdlog_path;
  std::string snapshot_path;
  std::size_t root_brokers = 1;
  std::size_t fork_brokers = 1;
  std::size_t flush_bytes = 1 << 20;
  std::uint32_t linger_ms = 5;
  std::uint64_t cache_bytes = 64ull << 20;
  std::uint32_t initial_roots = 1;
  bool fsync = true;
  std::uint64_t broker_seed = 0;
};

// Deterministic log-to-broker placement. Root logs spread round-robin over
// the root pool; forks go to the fork pool keyed by root ancestor so siblings
// co-locate; dedicated forks get a fresh broker past both pools. A fork never
// lands on its root's broker unless the pools leave no alternative.
class BrokerPlacement {
 public:
  BrokerPlacement(std::size_t root_brokers, std::size_t fork_brokers);

  std::size_t place_root(LogId root);
  std::size_t place_fork(LogId fork, LogId root_ancestor, bool dedicated);
  std::optional<std::size_t> broker_of(LogId log) const;
  std::size_t total_brokers() const { return next_dynamic_; }

 private:
  std::size_t root_pool_;
  std::size_t fork_pool_;
  std::size_t next_root_ = 0;
  std::size_t next_dynamic_;
  std::map<LogId, std::size_t> assignment_;
};

// Network front end: one listener, a thread per connection, frames routed to
// the placed broker's data path or to the metadata engine.
class Service {
 public:
  static Result<std::unique_ptr<Service>> start(ServiceConfig cfg);
  ~Service();

  void stop();
  std::uint16_t port() const { return port_; }

  Engine& engine() { return *engine_; }
  ObjectStore& store() { return *store_; }
  std::size_t broker_count() const;
  Broker& broker(std::size_t i);
  std::optional<std::size_t> broker_of(LogId log) const;

 private:
  Service() = default;
  void accept_loop();
  void serve_connection(int fd);
  Response handle(const Request& req);
  Broker& broker_for(LogId log);
  std::size_t ensure_broker(std::size_t index);
  static LogId root_ancestor_in(const ForestState& st, LogId log);

  ServiceConfig cfg_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<ObjectStore> store_;
  mutable std::mutex brokers_mu_;
  std::vector<std::unique_ptr<Broker>> brokers_;
  std::unique_ptr<BrokerPlacement> placement_;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  std::mutex conns_mu_;
  std::vector<int> conn_fds_;
  std::vector<std::thread> conn_threads_;
};

}  // namespace bolt
