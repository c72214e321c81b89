#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// Shared-storage abstraction: whole objects in, byte ranges out. Brokers are
// stateless; durability lives here (and in the command log).
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  // Stores bytes under id unless the id is already taken (returns false so
  // the caller can regenerate). Durable before returning true.
  virtual Result<bool> put_if_absent(const ObjectId& id, std::span<const std::uint8_t> bytes) = 0;
  virtual Result<std::vector<std::uint8_t>> get(const ObjectId& id) = 0;
  virtual Result<std::uint64_t> size_of(const ObjectId& id) = 0;

  // Instrumentation: whole-object fetches served by the backend.
  std::uint64_t backend_reads() const { return reads_.load(std::memory_order_relaxed); }

 protected:
  void count_read() { reads_.fetch_add(1, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> reads_{0};
};

// Generates a fresh 128-bit id and stores the object, regenerating on the
// (vanishingly unlikely) id collision.
Result<ObjectId> put_object(ObjectStore& store, std::span<const std::uint8_t> bytes,
                            std::mt19937_64& rng);

class MemObjectStore final : public ObjectStore {
 public:
  Result<bool> put_if_absent(const ObjectId& id, std::span<const std::uint8_t> bytes) override;
  Result<std::vector<std::uint8_t>> get(const ObjectId& id) override;
  Result<std::uint64_t> size_of(const ObjectId& id) override;

 private:
  mutable std::mutex mu_;
  std::unordered_map<ObjectId, std::vector<std::uint8_t>, ObjectIdHash> objects_;
};

// One file per object named by hex id under a two-level fan-out directory.
class FsObjectStore final : public ObjectStore {
 public:
  static Result<std::unique_ptr<FsObjectStore>> open(const std::string& root);

  Result<bool> put_if_absent(const ObjectId& id, std::span<const std::uint8_t> bytes) override;
  Result<std::vector<std::uint8_t>> get(const ObjectId& id) override;
  Result<std::uint64_t> size_of(const ObjectId& id) override;

 private:
  explicit FsObjectStore(std::string root) : root_(std::move(root)) {}
  std::string path_for(const ObjectId& id, bool create_dirs) const;

  std::string root_;
};

// Broker-local whole-object LRU cache, bounded by total cached bytes.
class ObjectCache {
 public:
  explicit ObjectCache(std::uint64_t capacity_bytes) : capacity_(capacity_bytes) {}

  std::shared_ptr<const std::vector<std::uint8_t>> get(const ObjectId& id);
  void put(const ObjectId& id, std::shared_ptr<const std::vector<std::uint8_t>> bytes);
  std::uint64_t cached_bytes() const;

 private:
  struct Entry {
    ObjectId id;
    std::shared_ptr<const std::vector<std::uint8_t>> bytes;
  };

  mutable std::mutex mu_;
  std::uint64_t capacity_;
  std::uint64_t used_ = 0;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<ObjectId, std::list<Entry>::iterator, ObjectIdHash> map_;
};

// Byte-range read through an optional cache; whole objects are fetched and
// cached, slices are served from the cached copy. Results are byte-identical
// with the cache disabled.
Result<std::vector<std::uint8_t>> get_range(ObjectStore& store, ObjectCache* cache,
                                            const ObjectRef& ref);

}  // namespace bolt
