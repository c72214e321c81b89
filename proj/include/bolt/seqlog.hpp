#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bolt/command.hpp"
#include "bolt/types.hpp"

namespace bolt {

// Durable, strictly ordered command log standing in for the consensus layer.
// The interface is abstract so a replicated implementation can replace the
// single-file backend without touching the state machine.
class CommandLog {
 public:
  virtual ~CommandLog() = default;

  using Sink = std::function<void(std::uint64_t seq, const Command& cmd)>;

  // Durably persists the command before returning its sequence number.
  // Sequence numbers are dense from 1.
  virtual Result<std::uint64_t> append(const Command& cmd) = 0;

  // Delivers commands with seq >= from, in order, exactly once. Returns the
  // count replayed. Exclusive with appends (runs at startup).
  virtual Result<std::uint64_t> replay(std::uint64_t from, const Sink& sink) = 0;

  // Drops every record with seq <= up_to (after a snapshot covers them).
  virtual Status truncate_prefix(std::uint64_t up_to) = 0;

  virtual std::uint64_t last_sequence() const = 0;
  virtual std::uint64_t first_sequence() const = 0;  // 0 when empty
};

// Single-file backend.
//
// File layout, all integers big-endian:
//   header: magic "BOLTCLOG", version u32, reserved u32   (16 bytes)
//   record: [u32 payload-length][u64 sequence][payload][u32 crc32(payload)]
//
// A torn tail (a final record cut short by a crash, structurally or by
// checksum) is detected on open and truncated away; a checksum mismatch with
// further records behind it is mid-log corruption and fails replay.
class FileCommandLog final : public CommandLog {
 public:
  static Result<std::unique_ptr<FileCommandLog>> open(const std::string& path,
                                                      bool fsync_each = true);
  ~FileCommandLog() override;

  Result<std::uint64_t> append(const Command& cmd) override;
  Result<std::uint64_t> replay(std::uint64_t from, const Sink& sink) override;
  Status truncate_prefix(std::uint64_t up_to) override;
  std::uint64_t last_sequence() const override { return last_seq_; }
  std::uint64_t first_sequence() const override { return first_seq_; }

 private:
  FileCommandLog(std::string path, bool fsync_each) : path_(std::move(path)), fsync_(fsync_each) {}
  Status scan();

  struct Extent {
    std::uint64_t seq;
    std::uint64_t offset;  // of the payload
    std::uint32_t length;
  };

  std::string path_;
  bool fsync_;
  int fd_ = -1;
  std::uint64_t end_offset_ = 0;
  std::uint64_t first_seq_ = 0;
  std::uint64_t last_seq_ = 0;
  std::vector<Extent> extents_;
  bool corrupt_mid_ = false;
};

// In-memory backend for tests and benchmarks.
class MemCommandLog final : public CommandLog {
 public:
  Result<std::uint64_t> append(const Command& cmd) override;
  Result<std::uint64_t> replay(std::uint64_t from, const Sink& sink) override;
  Status truncate_prefix(std::uint64_t up_to) override;
  std::uint64_t last_sequence() const override { return next_ - 1; }
  std::uint64_t first_sequence() const override;

 private:
  std::uint64_t next_ = 1;
  std::uint64_t first_ = 0;
  std::vector<std::pair<std::uint64_t, Command>> entries_;
};

// Snapshot file: magic "BOLTSNAP", version u32, reserved u32, fingerprint
// u64, last-applied sequence u64, [u32 length][state blob][u32 crc32(blob)].
struct SnapshotData {
  std::uint64_t fingerprint = 0;
  std::uint64_t last_applied = 0;
  std::vector<std::uint8_t> state_blob;
};

Status write_snapshot_file(const std::string& path, const SnapshotData& snap);
Result<SnapshotData> read_snapshot_file(const std::string& path);

}  // namespace bolt
