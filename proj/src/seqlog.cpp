#include "bolt/seqlog.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <memory>

#include "bolt/util/bytes.hpp"
#include "bolt/util/checksum.hpp"

namespace bolt {

namespace {

constexpr char kLogMagic[8] = {'B', 'O', 'L', 'T', 'C', 'L', 'O', 'G'};
constexpr char kSnapMagic[8] = {'B', 'O', 'L', 'T', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxRecordBytes = 64u << 20;

EngineError io_error(const char* what) {
  return make_error(ErrorCode::kStorageFailure,
                    std::string(what) + ": " + std::strerror(errno));
}

bool read_exact(int fd, std::uint64_t off, void* buf, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    ssize_t r = ::pread(fd, static_cast<char*>(buf) + done, n - done,
                        static_cast<off_t>(off + done));
    if (r <= 0) return false;
    done += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const void* buf, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    ssize_t r = ::write(fd, static_cast<const char*>(buf) + done, n - done);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(r);
  }
  return true;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

std::uint64_t be64(const std::uint8_t* p) {
  return (std::uint64_t{be32(p)} << 32) | be32(p + 4);
}

}  // namespace

Result<std::unique_ptr<FileCommandLog>> FileCommandLog::open(const std::string& path,
                                                             bool fsync_each) {
  auto log = std::unique_ptr<FileCommandLog>(new FileCommandLog(path, fsync_each));
  log->fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
  if (log->fd_ < 0) return io_error("open command log");
  if (Status s = log->scan(); !s.is_ok()) return s.error();
  return log;
}

FileCommandLog::~FileCommandLog() {
  if (fd_ >= 0) ::close(fd_);
}

Status FileCommandLog::scan() {
  off_t fsize = ::lseek(fd_, 0, SEEK_END);
  if (fsize < 0) return io_error("seek");
  std::uint64_t size = static_cast<std::uint64_t>(fsize);

  if (size == 0) {
    ByteWriter w;
    w.raw(kLogMagic, 8);
    w.u32(kVersion);
    w.u32(0);
    if (!write_all(fd_, w.data().data(), w.size())) return io_error("write header");
    if (fsync_ && ::fsync(fd_) != 0) return io_error("fsync header");
    end_offset_ = 16;
    return Status::ok();
  }
  if (size < 16) return make_error(ErrorCode::kProtocolError, "command log header truncated");
  std::uint8_t header[16];
  if (!read_exact(fd_, 0, header, 16)) return io_error("read header");
  if (std::memcmp(header, kLogMagic, 8) != 0 || be32(header + 8) != kVersion) {
    return make_error(ErrorCode::kProtocolError, "command log header mismatch");
  }

  std::uint64_t off = 16;
  std::uint64_t prev_seq = 0;
  bool torn = false;
  while (off < size) {
    // A record that does not fit or fails its checksum at the very end of the
    // file is a torn tail; anything earlier is corruption.
    if (size - off < 16) {
      torn = true;
      break;
    }
    std::uint8_t hdr[12];
    if (!read_exact(fd_, off, hdr, 12)) return io_error("read record header");
    std::uint32_t len = be32(hdr);
    std::uint64_t seq = be64(hdr + 4);
    std::uint64_t total = 12 + std::uint64_t{len} + 4;
    if (len > kMaxRecordBytes || size - off < total) {
      torn = true;
      break;
    }
    std::vector<std::uint8_t> payload(len);
    if (len && !read_exact(fd_, off + 12, payload.data(), len)) return io_error("read payload");
    std::uint8_t crc_raw[4];
    if (!read_exact(fd_, off + 12 + len, crc_raw, 4)) return io_error("read crc");
    bool ok = be32(crc_raw) == crc32(payload) &&
              (prev_seq == 0 ? seq >= 1 : seq == prev_seq + 1);
    if (!ok) {
      if (off + total == size) {
        torn = true;
        break;
      }
      corrupt_mid_ = true;
      break;
    }
    if (first_seq_ == 0) first_seq_ = seq;
    extents_.push_back(Extent{seq, off + 12, len});
    prev_seq = seq;
    off += total;
  }
  last_seq_ = prev_seq;
  end_offset_ = off;
  if (torn) {
    if (::ftruncate(fd_, static_cast<off_t>(end_offset_)) != 0) return io_error("truncate tail");
    if (fsync_ && ::fsync(fd_) != 0) return io_error("fsync truncate");
  }
  return Status::ok();
}

Result<std::uint64_t> FileCommandLog::append(const Command& cmd) {
  if (corrupt_mid_) return make_error(ErrorCode::kProtocolError, "command log is corrupt");
  std::vector<std::uint8_t> payload = encode_command(cmd);
  std::uint64_t seq = last_seq_ + 1;
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u64(seq);
  w.raw(payload.data(), payload.size());
  w.u32(crc32(payload));
  if (::lseek(fd_, static_cast<off_t>(end_offset_), SEEK_SET) < 0) return io_error("seek append");
  if (!write_all(fd_, w.data().data(), w.size())) return io_error("write record");
  if (fsync_ && ::fdatasync(fd_) != 0) return io_error("fdatasync record");
  extents_.push_back(Extent{seq, end_offset_ + 12, static_cast<std::uint32_t>(payload.size())});
  end_offset_ += w.size();
  if (first_seq_ == 0) first_seq_ = seq;
  last_seq_ = seq;
  return seq;
}

Result<std::uint64_t> FileCommandLog::replay(std::uint64_t from, const Sink& sink) {
  std::uint64_t count = 0;
  for (const Extent& e : extents_) {
    if (e.seq < from) continue;
    std::vector<std::uint8_t> payload(e.length);
    if (e.length && !read_exact(fd_, e.offset, payload.data(), e.length)) {
      return io_error("read payload");
    }
    auto cmd = decode_command(payload);
    if (!cmd.ok()) return cmd.error();
    sink(e.seq, cmd.value());
    ++count;
  }
  if (corrupt_mid_) {
    return make_error(ErrorCode::kProtocolError, "checksum mismatch mid-log");
  }
  return count;
}

Status FileCommandLog::truncate_prefix(std::uint64_t up_to) {
  if (up_to == 0) return Status::ok();
  if (corrupt_mid_) return make_error(ErrorCode::kProtocolError, "command log is corrupt");
  std::string tmp = path_ + ".tmp";
  int out = ::open(tmp.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
  if (out < 0) return io_error("open tmp log");
  ByteWriter w;
  w.raw(kLogMagic, 8);
  w.u32(kVersion);
  w.u32(0);
  std::vector<Extent> kept;
  std::uint64_t off = 16;
  for (const Extent& e : extents_) {
    if (e.seq <= up_to) continue;
    std::vector<std::uint8_t> payload(e.length);
    if (e.length && !read_exact(fd_, e.offset, payload.data(), e.length)) {
      ::close(out);
      return io_error("read payload");
    }
    w.u32(e.length);
    w.u64(e.seq);
    w.raw(payload.data(), payload.size());
    w.u32(crc32(payload));
    kept.push_back(Extent{e.seq, off + 12, e.length});
    off += 12 + std::uint64_t{e.length} + 4;
  }
  bool ok = write_all(out, w.data().data(), w.size()) && ::fsync(out) == 0;
  ::close(out);
  if (!ok) return io_error("write tmp log");
  if (std::rename(tmp.c_str(), path_.c_str()) != 0) return io_error("rename log");
  ::close(fd_);
  fd_ = ::open(path_.c_str(), O_RDWR, 0644);
  if (fd_ < 0) return io_error("reopen log");
  extents_ = std::move(kept);
  end_offset_ = off;
  first_seq_ = extents_.empty() ? 0 : extents_.front().seq;
  if (extents_.empty() && last_seq_ < up_to) last_seq_ = up_to;
  return Status::ok();
}

Result<std::uint64_t> MemCommandLog::append(const Command& cmd) {
  std::uint64_t seq = next_++;
  entries_.emplace_back(seq, cmd);
  if (first_ == 0) first_ = seq;
  return seq;
}

Result<std::uint64_t> MemCommandLog::replay(std::uint64_t from, const Sink& sink) {
  std::uint64_t count = 0;
  for (const auto& [seq, cmd] : entries_) {
    if (seq < from) continue;
    sink(seq, cmd);
    ++count;
  }
  return count;
}

Status MemCommandLog::truncate_prefix(std::uint64_t up_to) {
  std::erase_if(entries_, [up_to](const auto& e) { return e.first <= up_to; });
  first_ = entries_.empty() ? 0 : entries_.front().first;
  return Status::ok();
}

std::uint64_t MemCommandLog::first_sequence() const { return first_; }

Status write_snapshot_file(const std::string& path, const SnapshotData& snap) {
  ByteWriter w;
  w.raw(kSnapMagic, 8);
  w.u32(kVersion);
  w.u32(0);
  w.u64(snap.fingerprint);
  w.u64(snap.last_applied);
  w.u32(static_cast<std::uint32_t>(snap.state_blob.size()));
  w.raw(snap.state_blob.data(), snap.state_blob.size());
  w.u32(crc32(snap.state_blob));
  std::string tmp = path + ".tmp";
  int fd = ::open(tmp.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) return io_error("open tmp snapshot");
  bool ok = write_all(fd, w.data().data(), w.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) return io_error("write snapshot");
  if (std::rename(tmp.c_str(), path.c_str()) != 0) return io_error("rename snapshot");
  return Status::ok();
}

Result<SnapshotData> read_snapshot_file(const std::string& path) {
  std::error_code ec;
  auto fsize = std::filesystem::file_size(path, ec);
  if (ec) return make_error(ErrorCode::kStorageFailure, "snapshot unreadable: " + ec.message());
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) return io_error("open snapshot");
  std::vector<std::uint8_t> bytes(fsize);
  bool ok = read_exact(fd, 0, bytes.data(), bytes.size());
  ::close(fd);
  if (!ok) return io_error("read snapshot");

  ByteReader r(bytes);
  char magic[8];
  std::uint32_t version = 0;
  std::uint32_t reserved = 0;
  SnapshotData snap;
  if (!r.raw(magic, 8) || std::memcmp(magic, kSnapMagic, 8) != 0 || !r.u32(&version) ||
      version != kVersion || !r.u32(&reserved) || !r.u64(&snap.fingerprint) ||
      !r.u64(&snap.last_applied) || !r.bytes32(&snap.state_blob)) {
    return make_error(ErrorCode::kProtocolError, "snapshot header mismatch");
  }
  std::uint32_t crc = 0;
  if (!r.u32(&crc) || crc != crc32(snap.state_blob)) {
    return make_error(ErrorCode::kProtocolError, "snapshot checksum mismatch");
  }
  return snap;
}

}  // namespace bolt
