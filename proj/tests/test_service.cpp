#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "bolt/client.hpp"
#include "bolt/net.hpp"
#include "bolt/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace bolt;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bolt-svc-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

ServiceConfig base_config(const TempDir& dir) {
  ServiceConfig cfg;
  cfg.store = "fs:" + dir.file("objects");
  cfg.cmdlog_path = dir.file("cmd.log");
  cfg.linger_ms = 1;
  cfg.fsync = false;
  cfg.root_brokers = 1;
  cfg.fork_brokers = 2;
  cfg.broker_seed = 1;
  return cfg;
}

int raw_connect(std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  return fd;
}

}  // namespace

TEST_CASE("full client surface over a live service") {
  TempDir dir;
  auto svc = Service::start(base_config(dir)).take();
  auto client = BoltClient::connect("127.0.0.1", svc->port()).take();

  // Append and read on the root.
  auto p0 = client->append(1, bytes("hello"));
  REQUIRE(p0.ok());
  CHECK(p0.value() == Position{0});
  CHECK(client->append(1, bytes("world")).value() == Position{1});
  auto records = client->read(1, 0, 2);
  REQUIRE(records.ok());
  CHECK(records.value()[0] == bytes("hello"));
  CHECK(records.value()[1] == bytes("world"));
  CHECK(client->get_tail(1).value() == Position{2});

  // Forks mirror the engine interface.
  LogId cf = client->cfork(1).take();
  CHECK(client->get_tail(cf).value() == Position{2});
  LogId sf = client->sfork(1, Position{1}).take();
  CHECK(client->get_tail(sf).value() == Position{2});
  CHECK(client->read(sf, 0, 2).value()[0] == bytes("hello"));
  // Promote of a severed fork is refused.
  Status bad = client->promote(sf);
  REQUIRE_FALSE(bad.is_ok());
  CHECK(bad.code() == ErrorCode::kNotPromotable);

  // Promotable round trip: block, then promote, then read through.
  LogId promo = client->cfork(1, true).take();
  auto withheld = client->append(1, bytes("hidden"));
  REQUIRE(withheld.ok());
  CHECK_FALSE(withheld.value().has_value());  // withheld position
  CHECK_FALSE(client->get_tail(1).value().has_value());
  auto blocked = client->read(1, 0, 3);
  REQUIRE_FALSE(blocked.ok());
  CHECK(blocked.error().code == ErrorCode::kBlockedByPromotableFork);
  REQUIRE(client->append(promo, bytes("agent write")).ok());
  REQUIRE(client->promote(promo).is_ok());
  auto merged = client->read(1, 0, 4);
  REQUIRE(merged.ok());
  // "hidden" was sequenced into the parent before the fork's own append, so
  // the promoted interleaving keeps it first.
  CHECK(merged.value()[2] == bytes("hidden"));
  CHECK(merged.value()[3] == bytes("agent write"));

  // Squash returns the removed subtree.
  LogId doomed = client->cfork(1).take();
  LogId doomed_child = client->cfork(doomed).take();
  auto squashed = client->squash(doomed);
  REQUIRE(squashed.ok());
  CHECK(squashed.value().size() == 2);
  CHECK(std::count(squashed.value().begin(), squashed.value().end(), doomed_child) == 1);

  // Describe lists the forest.
  auto logs = client->describe();
  REQUIRE(logs.ok());
  bool saw_root = false;
  for (const LogInfo& info : logs.value()) {
    if (info.id == 1) {
      saw_root = true;
      CHECK(info.kind == LogKind::kRoot);
      CHECK(info.tail == Position{4});
    }
  }
  CHECK(saw_root);
  svc->stop();
}

TEST_CASE("data survives a service restart") {
  TempDir dir;
  ServiceConfig cfg = base_config(dir);
  LogId fork_id = 0;
  {
    auto svc = Service::start(cfg).take();
    auto client = BoltClient::connect("127.0.0.1", svc->port()).take();
    REQUIRE(client->append(1, bytes("persist me")).ok());
    fork_id = client->cfork(1).take();
    REQUIRE(client->append(fork_id, bytes("fork data")).ok());
    svc->stop();
  }
  {
    auto svc = Service::start(cfg).take();
    auto client = BoltClient::connect("127.0.0.1", svc->port()).take();
    CHECK(client->read(1, 0, 1).value()[0] == bytes("persist me"));
    CHECK(client->read(fork_id, 0, 2).value()[1] == bytes("fork data"));
    CHECK(client->get_tail(fork_id).value() == Position{2});
    svc->stop();
  }
}

TEST_CASE("malformed frames get a protocol error and the connection survives") {
  TempDir dir;
  ServiceConfig cfg = base_config(dir);
  cfg.store = "mem";
  auto svc = Service::start(cfg).take();
  int fd = raw_connect(svc->port());

  // Valid length prefix, garbage body.
  std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  REQUIRE(write_frame(fd, junk).is_ok());
  auto res = read_frame(fd);
  REQUIRE(res.ok());
  // status byte sits after the echoed request id.
  CHECK(res.value()[8] == static_cast<std::uint8_t>(ErrorCode::kProtocolError));

  // The same connection still serves real requests.
  Request req;
  req.request_id = 77;
  req.op = Opcode::kGetTail;
  req.body = LogReq{1};
  REQUIRE(write_frame(fd, encode_request(req)).is_ok());
  auto ok = read_frame(fd);
  REQUIRE(ok.ok());
  auto decoded = decode_response(ok.value(), Opcode::kGetTail);
  REQUIRE(decoded.ok());
  CHECK(decoded.value().request_id == 77);
  CHECK(decoded.value().ok());
  ::close(fd);
  svc->stop();
}

TEST_CASE("placement keeps forks off the root broker and co-locates siblings") {
  TempDir dir;
  ServiceConfig cfg = base_config(dir);
  cfg.store = "mem";
  cfg.root_brokers = 2;
  cfg.fork_brokers = 2;
  auto svc = Service::start(cfg).take();
  auto client = BoltClient::connect("127.0.0.1", svc->port()).take();

  std::size_t root_broker = svc->broker_of(1).value();
  LogId f1 = client->cfork(1).take();
  LogId f2 = client->cfork(1).take();
  LogId f3 = client->cfork(f1).take();
  CHECK(svc->broker_of(f1).value() != root_broker);
  // Siblings and descendants of one root co-locate.
  CHECK(svc->broker_of(f1).value() == svc->broker_of(f2).value());
  CHECK(svc->broker_of(f1).value() == svc->broker_of(f3).value());

  // A dedicated fork gets a broker of its own.
  LogId lone = client->cfork(1, false, true).take();
  std::size_t lone_broker = svc->broker_of(lone).value();
  CHECK(lone_broker != root_broker);
  CHECK(lone_broker != svc->broker_of(f1).value());
  REQUIRE(client->append(lone, bytes("solo")).ok());
  auto log = svc->broker(lone_broker).request_log();
  REQUIRE(log.size() == 1);
  CHECK(log[0].log == lone);
  svc->stop();
}

TEST_CASE("one client connection multiplexes concurrent sessions") {
  TempDir dir;
  ServiceConfig cfg = base_config(dir);
  cfg.store = "mem";
  auto svc = Service::start(cfg).take();
  auto client = BoltClient::connect("127.0.0.1", svc->port()).take();

  constexpr int kThreads = 8;
  constexpr int kPerThread = 25;
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        auto payload = bytes("t" + std::to_string(t) + "-" + std::to_string(i));
        if (!client->append(1, payload).ok()) ++failures;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(failures == 0);
  CHECK(client->get_tail(1).value() == Position{kThreads * kPerThread});
  svc->stop();
}

TEST_CASE("placement fallback avoids the root broker when pools run dry") {
  BrokerPlacement placement(2, 0);
  std::size_t rb = placement.place_root(1);
  std::size_t fb = placement.place_fork(5, 1, false);
  CHECK(fb != rb);
}
