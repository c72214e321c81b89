#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// Binary frames, all integers big-endian, byte strings length-prefixed (u32).
//   request:  [u32 length of remainder][u64 request_id][u8 opcode][body]
//   response: [u32 length of remainder][u64 request_id][u8 status][body]
// Responses echo the request_id; status 0 is ok, anything else is the
// EngineError code with an error body.
enum class Opcode : std::uint8_t {
  kAppend = 1,
  kRead = 2,
  kCFork = 3,
  kSFork = 4,
  kPromote = 5,
  kSquash = 6,
  kGetTail = 7,
  kDescribe = 8,
};

struct AppendReq {
  LogId log = kNoLog;
  std::vector<std::uint8_t> payload;
  bool operator==(const AppendReq&) const = default;
};
struct ReadReq {
  LogId log = kNoLog;
  Position from = 0;
  Position to = 0;
  bool operator==(const ReadReq&) const = default;
};
struct CForkReq {
  LogId parent = kNoLog;
  bool promotable = false;
  bool dedicated = false;
  bool operator==(const CForkReq&) const = default;
};
struct SForkReq {
  LogId parent = kNoLog;
  std::optional<Position> past;
  bool dedicated = false;
  bool operator==(const SForkReq&) const = default;
};
struct LogReq {  // promote / squash / get_tail
  LogId log = kNoLog;
  bool operator==(const LogReq&) const = default;
};
struct DescribeReq {
  bool operator==(const DescribeReq&) const = default;
};

struct Request {
  std::uint64_t request_id = 0;
  Opcode op = Opcode::kDescribe;
  std::variant<AppendReq, ReadReq, CForkReq, SForkReq, LogReq, DescribeReq> body;
};

struct LogInfo {
  LogId id = kNoLog;
  LogKind kind = LogKind::kRoot;
  LogId parent = kNoLog;
  std::optional<Position> fork_point;
  bool promotable = false;
  LogStatus status = LogStatus::kLive;
  std::optional<Position> tail;  // unset = withheld
  std::uint64_t broker = 0;
  bool operator==(const LogInfo&) const = default;
};

struct OkAppend {
  std::optional<Position> position;  // unset = withheld
  bool operator==(const OkAppend&) const = default;
};
struct OkRead {
  std::vector<std::vector<std::uint8_t>> records;
  bool operator==(const OkRead&) const = default;
};
struct OkFork {
  LogId id = kNoLog;
  bool operator==(const OkFork&) const = default;
};
struct OkPromote {
  bool operator==(const OkPromote&) const = default;
};
struct OkSquash {
  std::vector<LogId> ids;
  bool operator==(const OkSquash&) const = default;
};
struct OkTail {
  std::optional<Position> tail;  // unset = withheld
  bool operator==(const OkTail&) const = default;
};
struct OkDescribe {
  std::vector<LogInfo> logs;
  bool operator==(const OkDescribe&) const = default;
};

struct Response {
  std::uint64_t request_id = 0;
  std::uint8_t status = 0;  // 0 ok, else ErrorCode
  std::variant<std::monostate, OkAppend, OkRead, OkFork, OkPromote, OkSquash, OkTail, OkDescribe>
      body;
  // error body
  std::optional<Position> boundary;
  std::string detail;

  bool ok() const { return status == 0; }
  EngineError to_error() const {
    return EngineError{static_cast<ErrorCode>(status), detail, boundary};
  }
};

// Frame payloads exclude the leading u32 length.
std::vector<std::uint8_t> encode_request(const Request& req);
Result<Request> decode_request(std::span<const std::uint8_t> frame);
std::vector<std::uint8_t> encode_response(const Response& res);
// Decoding a response needs the opcode of the request it answers.
Result<Response> decode_response(std::span<const std::uint8_t> frame, Opcode op);

Response error_response(std::uint64_t request_id, const EngineError& err);

}  // namespace bolt
