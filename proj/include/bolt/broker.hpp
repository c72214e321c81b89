#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "bolt/engine.hpp"
#include "bolt/store.hpp"

namespace bolt {

// Multi-log object layout, all integers big-endian:
//   header: magic "BOLTOBJ1", version u32                    (12 bytes)
//   entry:  [log_id u64][payload_length u32][payload bytes]
// Recorded byte offsets point at the payload bytes, not the entry header.
struct ObjectEntry {
  LogId log = kNoLog;
  std::uint64_t offset = 0;  // of the payload within the object
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> build_object_payload(const std::vector<ObjectEntry*>& entries);
Result<std::vector<ObjectEntry>> parse_object_payload(std::span<const std::uint8_t> bytes);

struct BrokerOptions {
  std::size_t flush_bytes = 1 << 20;
  std::chrono::milliseconds linger{5};
  std::uint64_t cache_bytes = 64ull << 20;
  std::uint64_t rng_seed = 0;  // 0: seeded from std::random_device
};

struct RequestLogEntry {
  std::uint8_t opcode;  // wire opcode of the handled frame
  LogId log;
};

// Stateless front end for one placement slot: batches appends from many
// sessions into multi-log objects, writes the object durably, then submits
// the sequencing command; serves reads through a local object cache.
class Broker {
 public:
  Broker(std::size_t id, Engine& engine, ObjectStore& store, BrokerOptions opts);
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  std::size_t id() const { return id_; }

  // Buffers the payload and blocks until its batch is flushed and sequenced.
  // Appends from one session keep their submission order.
  Result<AppendAck> append(LogId log, std::vector<std::uint8_t> payload);

  Result<std::vector<std::vector<std::uint8_t>>> read(LogId log, Position from, Position to);

  std::uint64_t objects_written() const { return objects_written_; }
  std::vector<RequestLogEntry> request_log() const;
  void note_request(std::uint8_t opcode, LogId log);

 private:
  struct Pending {
    ObjectEntry entry;
    std::promise<Result<AppendAck>> ack;
    std::chrono::steady_clock::time_point enqueued;
  };

  void flusher_main();
  void flush_locked(std::unique_lock<std::mutex>& lock);

  std::size_t id_;
  Engine& engine_;
  ObjectStore& store_;
  BrokerOptions opts_;
  ObjectCache cache_;
  std::mt19937_64 rng_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Pending>> pending_;
  std::size_t pending_bytes_ = 0;
  bool stop_ = false;
  std::thread flusher_;

  std::uint64_t objects_written_ = 0;
  mutable std::mutex log_mu_;
  std::vector<RequestLogEntry> request_log_;
};

}  // namespace bolt
