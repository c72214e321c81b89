#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "bolt/broker.hpp"
#include "bolt/engine.hpp"
#include "bolt/store.hpp"

using namespace bolt;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bolt-store-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> bytes(const std::string& s) {
  return {s.begin(), s.end()};
}

std::unique_ptr<Engine> mem_engine() {
  return Engine::open(std::make_unique<MemCommandLog>()).take();
}

// Store wrapper asserting that no sequencing command referencing an object
// lands before that object is durable.
class OrderCheckingStore final : public ObjectStore {
 public:
  OrderCheckingStore(ObjectStore& inner, Engine*& engine) : inner_(inner), engine_(engine) {}

  Result<bool> put_if_absent(const ObjectId& id, std::span<const std::uint8_t> b) override {
    if (engine_) {
      engine_->with_state([&](const ForestState& st) {
        for (LogId log : st.live_logs()) {
          for (const auto& slot : st.find_index(log)->slots()) {
            REQUIRE(slot.entry.ref.object != id);
          }
        }
        return 0;
      });
    }
    return inner_.put_if_absent(id, b);
  }
  Result<std::vector<std::uint8_t>> get(const ObjectId& id) override {
    count_read();
    return inner_.get(id);
  }
  Result<std::uint64_t> size_of(const ObjectId& id) override { return inner_.size_of(id); }

 private:
  ObjectStore& inner_;
  Engine*& engine_;
};

}  // namespace

TEST_CASE("object payload codec round trips and records payload offsets") {
  ObjectEntry a{3, 0, bytes("alpha")};
  ObjectEntry b{9, 0, bytes("bee")};
  ObjectEntry c{3, 0, bytes("gamma!")};
  std::vector<ObjectEntry*> entries{&a, &b, &c};
  std::vector<std::uint8_t> object = build_object_payload(entries);

  // Offsets point at payload bytes inside the object.
  CHECK(std::string(object.begin() + static_cast<long>(a.offset),
                    object.begin() + static_cast<long>(a.offset + 5)) == "alpha");
  CHECK(std::string(object.begin() + static_cast<long>(c.offset),
                    object.begin() + static_cast<long>(c.offset + 6)) == "gamma!");

  auto parsed = parse_object_payload(object);
  REQUIRE(parsed.ok());
  REQUIRE(parsed.value().size() == 3);
  CHECK(parsed.value()[0].log == 3);
  CHECK(parsed.value()[1].payload == bytes("bee"));
  CHECK(parsed.value()[2].offset == c.offset);

  object.pop_back();
  CHECK_FALSE(parse_object_payload(object).ok());
}

TEST_CASE("stores round trip bytes and mint fresh ids") {
  std::mt19937_64 rng(1);
  MemObjectStore mem;
  auto payload = bytes("hello object");
  ObjectId id = put_object(mem, payload, rng).take();
  CHECK(mem.get(id).value() == payload);
  ObjectId id2 = put_object(mem, payload, rng).take();
  CHECK_FALSE(id == id2);  // identical bytes, distinct identities
  CHECK(get_range(mem, nullptr, ObjectRef{id, 6, 6}).value() == bytes("object"));
  auto oob = get_range(mem, nullptr, ObjectRef{id, 8, 20});
  REQUIRE_FALSE(oob.ok());
  CHECK(oob.error().code == ErrorCode::kProtocolError);
  CHECK_FALSE(mem.get(ObjectId{1, 2}).ok());
}

TEST_CASE("filesystem backend survives reopen") {
  TempDir dir;
  std::mt19937_64 rng(2);
  ObjectId id;
  {
    auto store = FsObjectStore::open(dir.file("objects")).take();
    id = put_object(*store, bytes("durable bytes"), rng).take();
    // Same id cannot be claimed twice.
    CHECK_FALSE(store->put_if_absent(id, bytes("other")).value());
  }
  auto store = FsObjectStore::open(dir.file("objects")).take();
  CHECK(store->get(id).value() == bytes("durable bytes"));
  CHECK(store->size_of(id).value() == 13);
}

TEST_CASE("cache serves repeated reads without backend traffic") {
  std::mt19937_64 rng(3);
  MemObjectStore store;
  ObjectCache cache(1 << 20);
  ObjectId id = put_object(store, bytes("0123456789"), rng).take();

  CHECK(get_range(store, &cache, ObjectRef{id, 0, 4}).value() == bytes("0123"));
  std::uint64_t after_first = store.backend_reads();
  CHECK(after_first == 1);
  CHECK(get_range(store, &cache, ObjectRef{id, 4, 4}).value() == bytes("4567"));
  CHECK(get_range(store, &cache, ObjectRef{id, 8, 2}).value() == bytes("89"));
  CHECK(store.backend_reads() == after_first);  // cache hits only

  // With the cache off the results are byte-identical.
  CHECK(get_range(store, nullptr, ObjectRef{id, 4, 4}).value() ==
        get_range(store, &cache, ObjectRef{id, 4, 4}).value());
}

TEST_CASE("cache evicts by least recent use and respects capacity") {
  ObjectCache cache(100);
  auto blob = [](std::size_t n, char c) {
    return std::make_shared<const std::vector<std::uint8_t>>(n, static_cast<std::uint8_t>(c));
  };
  cache.put(ObjectId{1, 0}, blob(40, 'a'));
  cache.put(ObjectId{2, 0}, blob(40, 'b'));
  CHECK(cache.get(ObjectId{1, 0}) != nullptr);  // freshen 1
  cache.put(ObjectId{3, 0}, blob(40, 'c'));     // evicts 2
  CHECK(cache.get(ObjectId{2, 0}) == nullptr);
  CHECK(cache.get(ObjectId{1, 0}) != nullptr);
  CHECK(cache.cached_bytes() <= 100);
  // Oversized objects are passed through uncached.
  cache.put(ObjectId{4, 0}, blob(500, 'd'));
  CHECK(cache.get(ObjectId{4, 0}) == nullptr);
}

TEST_CASE("broker batches appends into multi-log objects") {
  auto engine = mem_engine();
  ApplyResult fork = engine->submit(CreateSFork{1, std::nullopt});
  LogId other = *fork.created;

  MemObjectStore store;
  BrokerOptions opts;
  opts.flush_bytes = 1 << 20;
  opts.linger = std::chrono::milliseconds(20);
  opts.rng_seed = 7;
  Broker broker(0, *engine, store, opts);

  // Two sessions, two logs, one linger window: one object.
  std::optional<Position> p1, p2;
  std::thread t1([&] { p1 = broker.append(1, bytes("from session one")).take().position; });
  std::thread t2([&] { p2 = broker.append(other, bytes("from session two")).take().position; });
  t1.join();
  t2.join();
  CHECK(broker.objects_written() == 1);
  CHECK(p1.has_value());
  CHECK(p2.has_value());
  CHECK(*p1 == 0);
  CHECK(*p2 == 0);  // per-log positions assigned independently

  // Read-your-writes through the broker read path.
  auto own = broker.read(1, 0, 1);
  REQUIRE(own.ok());
  CHECK(own.value()[0] == bytes("from session one"));
  CHECK(broker.read(other, 0, 1).value()[0] == bytes("from session two"));
}

TEST_CASE("broker session order is preserved within a flush") {
  auto engine = mem_engine();
  MemObjectStore store;
  BrokerOptions opts;
  opts.linger = std::chrono::milliseconds(30);
  opts.rng_seed = 8;
  Broker broker(0, *engine, store, opts);

  // One session appending twice back to back: the acks must be ordered.
  std::vector<Position> got;
  std::thread t([&] {
    for (int i = 0; i < 4; ++i) {
      auto ack = broker.append(1, bytes("payload-" + std::to_string(i)));
      REQUIRE(ack.ok());
      got.push_back(ack.value().position);
    }
  });
  t.join();
  CHECK(got == std::vector<Position>{0, 1, 2, 3});
  auto records = broker.read(1, 0, 4);
  REQUIRE(records.ok());
  for (int i = 0; i < 4; ++i) CHECK(records.value()[i] == bytes("payload-" + std::to_string(i)));
}

TEST_CASE("durability ordering: objects are stored before sequencing") {
  Engine* engine_ptr = nullptr;
  MemObjectStore inner;
  OrderCheckingStore store(inner, engine_ptr);
  auto engine = mem_engine();
  engine_ptr = engine.get();

  BrokerOptions opts;
  opts.linger = std::chrono::milliseconds(1);
  opts.rng_seed = 9;
  Broker broker(0, *engine, store, opts);
  for (int i = 0; i < 20; ++i) {
    REQUIRE(broker.append(1, bytes("record " + std::to_string(i))).ok());
  }
  CHECK(store.backend_reads() == 0);
}

TEST_CASE("metastate errors fail only the offending records of a batch") {
  auto engine = mem_engine();
  MemObjectStore store;
  BrokerOptions opts;
  opts.linger = std::chrono::milliseconds(30);
  opts.rng_seed = 10;
  Broker broker(0, *engine, store, opts);

  Result<AppendAck> good{EngineError{}};
  Result<AppendAck> bad{EngineError{}};
  std::thread t1([&] { good = broker.append(1, bytes("fine")); });
  std::thread t2([&] { bad = broker.append(4242, bytes("no such log")); });
  t1.join();
  t2.join();
  REQUIRE(good.ok());
  CHECK(good.value().position == 0);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == ErrorCode::kUnknownLog);
}

TEST_CASE("a backend failure during flush fails the whole batch") {
  class BrokenStore final : public ObjectStore {
   public:
    Result<bool> put_if_absent(const ObjectId&, std::span<const std::uint8_t>) override {
      return make_error(ErrorCode::kStorageFailure, "backend down");
    }
    Result<std::vector<std::uint8_t>> get(const ObjectId&) override {
      return make_error(ErrorCode::kStorageFailure, "backend down");
    }
    Result<std::uint64_t> size_of(const ObjectId&) override {
      return make_error(ErrorCode::kStorageFailure, "backend down");
    }
  };

  auto engine = mem_engine();
  BrokenStore store;
  BrokerOptions opts;
  opts.linger = std::chrono::milliseconds(20);
  Broker broker(0, *engine, store, opts);
  Result<AppendAck> a{EngineError{}};
  Result<AppendAck> b{EngineError{}};
  std::thread t1([&] { a = broker.append(1, bytes("one")); });
  std::thread t2([&] { b = broker.append(1, bytes("two")); });
  t1.join();
  t2.join();
  REQUIRE_FALSE(a.ok());
  REQUIRE_FALSE(b.ok());
  CHECK(a.error().code == ErrorCode::kStorageFailure);
  CHECK(b.error().code == ErrorCode::kStorageFailure);
  // Nothing was sequenced: position assignment happens only after a durable
  // object write, so the retry is safe.
  CHECK(engine->get_tail(1).value().value == 0);
}

TEST_CASE("broker reads pass blocking through with the boundary") {
  auto engine = mem_engine();
  MemObjectStore store;
  BrokerOptions opts;
  opts.linger = std::chrono::milliseconds(1);
  opts.rng_seed = 11;
  Broker broker(0, *engine, store, opts);

  REQUIRE(broker.append(1, bytes("a")).ok());
  REQUIRE(broker.append(1, bytes("b")).ok());
  REQUIRE(engine->submit(CreateCFork{1, true}).ok());
  auto ack = broker.append(1, bytes("c"));
  REQUIRE(ack.ok());
  CHECK(ack.value().withheld);

  auto blocked = broker.read(1, 0, 3);
  REQUIRE_FALSE(blocked.ok());
  CHECK(blocked.error().code == ErrorCode::kBlockedByPromotableFork);
  CHECK(blocked.error().boundary == Position{2});
}
