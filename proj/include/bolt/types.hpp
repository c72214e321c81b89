#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace bolt {

// Identifier of one log within an engine instance. Assigned monotonically,
// never reused after squash. 0 is reserved as "no parent".
using LogId = std::uint64_t;
inline constexpr LogId kNoLog = 0;

// Zero-based slot in one log's total order. Positions are dense per log:
// every position in [0, tail) resolves to exactly one record.
using Position = std::uint64_t;

enum class LogKind : std::uint8_t {
  kRoot = 0,
  kCFork = 1,  // continuous fork: inherits parent appends after the fork point
  kSFork = 2,  // severed fork: shares the prefix only
};

enum class LogStatus : std::uint8_t {
  kLive = 0,
  kSquashed = 1,
  kPromotedAway = 2,
};

// 128-bit object identifier, rendered as 32 lowercase hex characters.
struct ObjectId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  bool operator==(const ObjectId&) const = default;
  bool operator<(const ObjectId& o) const { return hi != o.hi ? hi < o.hi : lo < o.lo; }

  std::string hex() const;
  static std::optional<ObjectId> from_hex(const std::string& s);
};

struct ObjectIdHash {
  std::size_t operator()(const ObjectId& id) const {
    return static_cast<std::size_t>(id.hi ^ (id.lo * 0x9E3779B97F4A7C15ULL));
  }
};

// Locates one record's payload inside a shared-storage object.
struct ObjectRef {
  ObjectId object;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  bool operator==(const ObjectRef&) const = default;
};

// True iff the ref's byte range falls inside an object of `object_size` bytes.
// Zero-length refs are invalid.
bool validate_object_ref(const ObjectRef& ref, std::uint64_t object_size);

// Identity, lineage and lifecycle of one log.
struct LogDescriptor {
  LogId id = kNoLog;
  LogKind kind = LogKind::kRoot;
  LogId parent = kNoLog;                   // kNoLog iff kind == kRoot
  std::optional<Position> fork_point;      // initial tail at creation; unset for roots
  bool promotable = false;                 // only meaningful for cForks
  LogStatus status = LogStatus::kLive;

  bool live() const { return status == LogStatus::kLive; }
};

// One cell of a log's sparse index: the object location of a locally appended
// record plus the cumulative count of local appends up to and including it.
struct IndexEntry {
  ObjectRef ref;
  std::uint64_t local_count = 0;
};

enum class ErrorCode : std::uint8_t {
  kUnknownLog = 1,
  kLogSquashed = 2,
  kPositionOutOfRange = 3,
  kBlockedByPromotableFork = 4,
  kNotPromotable = 5,
  kPromoteRaceLost = 6,
  kSquashRootForbidden = 7,
  kStorageFailure = 8,
  kProtocolError = 9,
};

const char* to_string(ErrorCode code);

struct EngineError {
  ErrorCode code = ErrorCode::kProtocolError;
  std::string detail;
  // Blocking fork point, always set for kBlockedByPromotableFork (the error is
  // retryable once the promotable fork is promoted or squashed).
  std::optional<Position> boundary;
};

inline EngineError make_error(ErrorCode code, std::string detail = {},
                              std::optional<Position> boundary = std::nullopt) {
  return EngineError{code, std::move(detail), boundary};
}

// Minimal value-or-error carrier used across the engine.
template <class T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}          // NOLINT(google-explicit-constructor)
  Result(EngineError err) : v_(std::move(err)) {}    // NOLINT(google-explicit-constructor)

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(v_); }
  T& value() & { return std::get<T>(v_); }
  T&& take() { return std::move(std::get<T>(v_)); }

  const EngineError& error() const { return std::get<EngineError>(v_); }
  ErrorCode code() const { return error().code; }

 private:
  std::variant<T, EngineError> v_;
};

class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(EngineError err) : err_(std::move(err)) {}  // NOLINT(google-explicit-constructor)

  static Status ok() { return Status(); }

  bool is_ok() const { return !err_.has_value(); }
  explicit operator bool() const { return is_ok(); }
  const EngineError& error() const { return *err_; }
  ErrorCode code() const { return err_->code; }

 private:
  std::optional<EngineError> err_;
};

}  // namespace bolt
