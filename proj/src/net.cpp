#include "bolt/net.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

namespace bolt {

namespace {

bool read_full(int fd, void* buf, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    ssize_t r = ::recv(fd, static_cast<char*>(buf) + done, n - done, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

Result<std::vector<std::uint8_t>> read_frame(int fd) {
  std::uint8_t len_raw[4];
  if (!read_full(fd, len_raw, 4)) {
    return make_error(ErrorCode::kStorageFailure, "connection closed");
  }
  std::uint32_t len = (std::uint32_t{len_raw[0]} << 24) | (std::uint32_t{len_raw[1]} << 16) |
                      (std::uint32_t{len_raw[2]} << 8) | std::uint32_t{len_raw[3]};
  if (len == 0 || len > kMaxFrameBytes) {
    return make_error(ErrorCode::kProtocolError, "frame length out of range");
  }
  std::vector<std::uint8_t> payload(len);
  if (!read_full(fd, payload.data(), len)) {
    return make_error(ErrorCode::kStorageFailure, "connection closed mid-frame");
  }
  return payload;
}

Status write_frame(int fd, std::span<const std::uint8_t> payload) {
  std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  std::uint8_t hdr[4] = {static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
                         static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
  std::vector<std::uint8_t> buf;
  buf.reserve(4 + payload.size());
  buf.insert(buf.end(), hdr, hdr + 4);
  buf.insert(buf.end(), payload.begin(), payload.end());
  std::size_t done = 0;
  while (done < buf.size()) {
    ssize_t w = ::send(fd, buf.data() + done, buf.size() - done, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return make_error(ErrorCode::kStorageFailure,
                        std::string("send: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(w);
  }
  return Status::ok();
}

}  // namespace bolt
