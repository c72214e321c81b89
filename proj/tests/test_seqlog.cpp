#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "bolt/engine.hpp"
#include "bolt/seqlog.hpp"

using namespace bolt;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bolt-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Command cmd_for(std::uint64_t i) {
  if (i % 3 == 0) return Command{CreateCFork{1 + i % 2, i % 5 == 0}};
  SequenceBatch b;
  b.object = ObjectId{i, ~i};
  b.records.push_back(SequenceRecord{1, i * 8, 8});
  return b;
}

std::uint64_t file_size(const std::string& path) {
  return static_cast<std::uint64_t>(fs::file_size(path));
}

}  // namespace

TEST_CASE("appends get dense sequence numbers that survive reopen") {
  TempDir dir;
  std::string path = dir.file("cmd.log");
  {
    auto log = FileCommandLog::open(path, false).take();
    CHECK(log->append(cmd_for(1)).value() == 1);
    for (std::uint64_t i = 2; i <= 200; ++i) {
      CHECK(log->append(cmd_for(i)).value() == i);
    }
    CHECK(log->last_sequence() == 200);
  }
  auto log = FileCommandLog::open(path, false).take();
  CHECK(log->first_sequence() == 1);
  CHECK(log->last_sequence() == 200);
  std::uint64_t expect = 1;
  auto replayed = log->replay(1, [&](std::uint64_t seq, const Command& cmd) {
    CHECK(seq == expect);
    CHECK(cmd == cmd_for(expect));
    ++expect;
  });
  REQUIRE(replayed.ok());
  CHECK(replayed.value() == 200);
  CHECK(log->replay(150, [](std::uint64_t, const Command&) {}).value() == 51);
}

TEST_CASE("torn tails truncate cleanly at any byte offset") {
  TempDir dir;
  std::string ref_path = dir.file("ref.log");
  const std::uint64_t kCommands = 60;
  std::vector<std::uint64_t> record_ends;  // file size after each append
  {
    auto log = FileCommandLog::open(ref_path, false).take();
    for (std::uint64_t i = 1; i <= kCommands; ++i) {
      REQUIRE(log->append(cmd_for(i)).ok());
      record_ends.push_back(file_size(ref_path));
    }
  }
  std::vector<std::uint8_t> full;
  {
    std::ifstream in(ref_path, std::ios::binary);
    full.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::mt19937_64 rng(77);
  for (int round = 0; round < 50; ++round) {
    std::uint64_t cut = 16 + rng() % (full.size() - 16);
    std::string path = dir.file("torn-" + std::to_string(round) + ".log");
    {
      std::ofstream out(path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(full.data()), static_cast<std::streamsize>(cut));
    }
    auto log = FileCommandLog::open(path, false);
    REQUIRE(log.ok());
    // Every fully persisted command survives; the torn one vanishes.
    std::uint64_t intact = 0;
    while (intact < record_ends.size() && record_ends[intact] <= cut) ++intact;
    std::uint64_t seen = 0;
    auto replayed = log.value()->replay(1, [&](std::uint64_t seq, const Command& cmd) {
      ++seen;
      CHECK(seq == seen);
      CHECK(cmd == cmd_for(seq));
    });
    REQUIRE(replayed.ok());
    CHECK(replayed.value() == intact);
    // Appending after recovery keeps the numbering dense.
    CHECK(log.value()->append(cmd_for(999)).value() == intact + 1);
  }
}

TEST_CASE("checksum mismatch mid-log is corruption, not a torn tail") {
  TempDir dir;
  std::string path = dir.file("cmd.log");
  {
    auto log = FileCommandLog::open(path, false).take();
    for (std::uint64_t i = 1; i <= 20; ++i) REQUIRE(log->append(cmd_for(i)).ok());
  }
  // Flip one payload byte early in the file.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    char c;
    f.seekg(40);
    f.get(c);
    f.seekp(40);
    f.put(static_cast<char>(c ^ 0x5a));
  }
  auto log = FileCommandLog::open(path, false);
  REQUIRE(log.ok());
  auto replayed = log.value()->replay(1, [](std::uint64_t, const Command&) {});
  REQUIRE_FALSE(replayed.ok());
  CHECK(replayed.error().code == ErrorCode::kProtocolError);
}

TEST_CASE("snapshot plus suffix replay reproduces the state fingerprint") {
  TempDir dir;
  EngineOptions opts;
  opts.snapshot_path = dir.file("snap");
  auto open_engine = [&] {
    return Engine::open(FileCommandLog::open(dir.file("cmd.log"), false).take(), opts).take();
  };

  std::uint64_t fp_before = 0;
  {
    auto engine = open_engine();
    for (std::uint64_t i = 1; i <= 120; ++i) engine->submit(cmd_for(i));
    REQUIRE(engine->save_snapshot().is_ok());
    for (std::uint64_t i = 121; i <= 200; ++i) engine->submit(cmd_for(i));
    fp_before = engine->fingerprint();
  }
  {
    auto engine = open_engine();
    CHECK(engine->fingerprint() == fp_before);
    CHECK(engine->last_applied() == 200);
  }
  // A plain full replay (no snapshot) of the same commands agrees.
  {
    auto log = std::make_unique<MemCommandLog>();
    for (std::uint64_t i = 1; i <= 200; ++i) REQUIRE(log->append(cmd_for(i)).ok());
    auto engine = Engine::open(std::move(log)).take();
    CHECK(engine->fingerprint() == fp_before);
  }
}

TEST_CASE("truncate keeps the suffix replayable") {
  TempDir dir;
  std::string path = dir.file("cmd.log");
  auto log = FileCommandLog::open(path, false).take();
  for (std::uint64_t i = 1; i <= 30; ++i) REQUIRE(log->append(cmd_for(i)).ok());
  REQUIRE(log->truncate_prefix(0).is_ok());  // no-op
  CHECK(log->first_sequence() == 1);
  REQUIRE(log->truncate_prefix(10).is_ok());
  CHECK(log->first_sequence() == 11);
  CHECK(log->last_sequence() == 30);
  std::uint64_t seen = 10;
  REQUIRE(log->replay(1, [&](std::uint64_t seq, const Command&) {
                ++seen;
                CHECK(seq == seen);
              })
              .ok());
  CHECK(seen == 30);
  // Reopen sees the truncated file.
  log.reset();
  auto reopened = FileCommandLog::open(path, false).take();
  CHECK(reopened->first_sequence() == 11);
  CHECK(reopened->append(cmd_for(31)).value() == 31);
}

TEST_CASE("empty log replays nothing") {
  TempDir dir;
  auto log = FileCommandLog::open(dir.file("cmd.log"), false).take();
  CHECK(log->replay(1, [](std::uint64_t, const Command&) { FAIL("no commands"); }).value() == 0);
  CHECK(log->last_sequence() == 0);
}

TEST_CASE("snapshot files carry a verified fingerprint") {
  TempDir dir;
  SnapshotData snap;
  snap.fingerprint = 0xDEADBEEF;
  snap.last_applied = 42;
  snap.state_blob = {1, 2, 3, 4, 5};
  REQUIRE(write_snapshot_file(dir.file("snap"), snap).is_ok());
  auto back = read_snapshot_file(dir.file("snap"));
  REQUIRE(back.ok());
  CHECK(back.value().fingerprint == snap.fingerprint);
  CHECK(back.value().last_applied == 42);
  CHECK(back.value().state_blob == snap.state_blob);

  // Corrupt the blob: the checksum must catch it.
  {
    std::fstream f(dir.file("snap"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x7f');
  }
  CHECK_FALSE(read_snapshot_file(dir.file("snap")).ok());
}
