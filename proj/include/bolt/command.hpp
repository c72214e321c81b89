#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// One record within a SequenceBatch: destination log plus the byte range of
// the record's payload inside the batch's object.
struct SequenceRecord {
  LogId log = kNoLog;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  bool operator==(const SequenceRecord&) const = default;
};

// Record-order within the list is the sequencing order.
struct SequenceBatch {
  ObjectId object;
  std::vector<SequenceRecord> records;

  bool operator==(const SequenceBatch&) const = default;
};

struct CreateCFork {
  LogId parent = kNoLog;
  bool promotable = false;

  bool operator==(const CreateCFork&) const = default;
};

struct CreateSFork {
  LogId parent = kNoLog;
  std::optional<Position> past;

  bool operator==(const CreateSFork&) const = default;
};

struct Promote {
  LogId child = kNoLog;

  bool operator==(const Promote&) const = default;
};

struct Squash {
  LogId log = kNoLog;

  bool operator==(const Squash&) const = default;
};

// One deterministic metadata-layer operation as written to the command log.
using Command = std::variant<SequenceBatch, CreateCFork, CreateSFork, Promote, Squash>;

std::vector<std::uint8_t> encode_command(const Command& cmd);
Result<Command> decode_command(std::span<const std::uint8_t> bytes);

}  // namespace bolt
