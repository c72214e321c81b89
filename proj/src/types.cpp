#include "bolt/types.hpp"

#include <cstdio>

namespace bolt {

std::string ObjectId::hex() const {
  char out[33];
  std::snprintf(out, sizeof(out), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return std::string(out, 32);
}

std::optional<ObjectId> ObjectId::from_hex(const std::string& s) {
  if (s.size() != 32) return std::nullopt;
  std::uint64_t vals[2] = {0, 0};
  for (int half = 0; half < 2; ++half) {
    for (int i = 0; i < 16; ++i) {
      char c = s[static_cast<std::size_t>(half * 16 + i)];
      std::uint64_t d;
      if (c >= '0' && c <= '9') {
        d = static_cast<std::uint64_t>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        d = static_cast<std::uint64_t>(c - 'a' + 10);
      } else {
        return std::nullopt;
      }
      vals[half] = (vals[half] << 4) | d;
    }
  }
  return ObjectId{vals[0], vals[1]};
}

bool validate_object_ref(const ObjectRef& ref, std::uint64_t object_size) {
  if (ref.length == 0) return false;
  if (ref.offset > object_size) return false;
  return object_size - ref.offset >= ref.length;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownLog: return "UnknownLog";
    case ErrorCode::kLogSquashed: return "LogSquashed";
    case ErrorCode::kPositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::kBlockedByPromotableFork: return "BlockedByPromotableFork";
    case ErrorCode::kNotPromotable: return "NotPromotable";
    case ErrorCode::kPromoteRaceLost: return "PromoteRaceLost";
    case ErrorCode::kSquashRootForbidden: return "SquashRootForbidden";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kProtocolError: return "ProtocolError";
  }
  return "UnknownError";
}

}  // namespace bolt
