#include "bolt/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

namespace bolt {

namespace {

EngineError io_error(const char* what) {
  return make_error(ErrorCode::kStorageFailure,
                    std::string(what) + ": " + std::strerror(errno));
}

}  // namespace

Result<ObjectId> put_object(ObjectStore& store, std::span<const std::uint8_t> bytes,
                            std::mt19937_64& rng) {
  for (;;) {
    ObjectId id{rng(), rng()};
    if (id.hi == 0 && id.lo == 0) continue;
    auto r = store.put_if_absent(id, bytes);
    if (!r.ok()) return r.error();
    if (r.value()) return id;
  }
}

Result<bool> MemObjectStore::put_if_absent(const ObjectId& id,
                                           std::span<const std::uint8_t> bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = objects_.try_emplace(id, bytes.begin(), bytes.end());
  return inserted;
}

Result<std::vector<std::uint8_t>> MemObjectStore::get(const ObjectId& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = objects_.find(id);
  if (it == objects_.end()) return make_error(ErrorCode::kStorageFailure, "object not found");
  count_read();
  return it->second;
}

Result<std::uint64_t> MemObjectStore::size_of(const ObjectId& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = objects_.find(id);
  if (it == objects_.end()) return make_error(ErrorCode::kStorageFailure, "object not found");
  return static_cast<std::uint64_t>(it->second.size());
}

Result<std::unique_ptr<FsObjectStore>> FsObjectStore::open(const std::string& root) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) return make_error(ErrorCode::kStorageFailure, "create store root: " + ec.message());
  return std::unique_ptr<FsObjectStore>(new FsObjectStore(root));
}

std::string FsObjectStore::path_for(const ObjectId& id, bool create_dirs) const {
  std::string hex = id.hex();
  std::string dir = root_ + "/" + hex.substr(0, 2) + "/" + hex.substr(2, 2);
  if (create_dirs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
  }
  return dir + "/" + hex;
}

Result<bool> FsObjectStore::put_if_absent(const ObjectId& id,
                                          std::span<const std::uint8_t> bytes) {
  std::string path = path_for(id, true);
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
  if (fd < 0) {
    if (errno == EEXIST) return false;
    return io_error("create object");
  }
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t w = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      return io_error("write object");
    }
    done += static_cast<std::size_t>(w);
  }
  bool ok = ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) return io_error("fsync object");
  return true;
}

Result<std::vector<std::uint8_t>> FsObjectStore::get(const ObjectId& id) {
  std::string path = path_for(id, false);
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) return make_error(ErrorCode::kStorageFailure, "object not found");
  off_t size = ::lseek(fd, 0, SEEK_END);
  if (size < 0) {
    ::close(fd);
    return io_error("object size");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
  std::size_t done = 0;
  while (done < out.size()) {
    ssize_t r = ::pread(fd, out.data() + done, out.size() - done, static_cast<off_t>(done));
    if (r <= 0) {
      ::close(fd);
      return io_error("read object");
    }
    done += static_cast<std::size_t>(r);
  }
  ::close(fd);
  count_read();
  return out;
}

Result<std::uint64_t> FsObjectStore::size_of(const ObjectId& id) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path_for(id, false), ec);
  if (ec) return make_error(ErrorCode::kStorageFailure, "object not found");
  return static_cast<std::uint64_t>(size);
}

std::shared_ptr<const std::vector<std::uint8_t>> ObjectCache::get(const ObjectId& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = map_.find(id);
  if (it == map_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->bytes;
}

void ObjectCache::put(const ObjectId& id, std::shared_ptr<const std::vector<std::uint8_t>> bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  if (bytes->size() > capacity_) return;
  if (auto it = map_.find(id); it != map_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  used_ += bytes->size();
  lru_.push_front(Entry{id, std::move(bytes)});
  map_[id] = lru_.begin();
  while (used_ > capacity_ && !lru_.empty()) {
    used_ -= lru_.back().bytes->size();
    map_.erase(lru_.back().id);
    lru_.pop_back();
  }
}

std::uint64_t ObjectCache::cached_bytes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return used_;
}

Result<std::vector<std::uint8_t>> get_range(ObjectStore& store, ObjectCache* cache,
                                            const ObjectRef& ref) {
  std::shared_ptr<const std::vector<std::uint8_t>> obj;
  if (cache) obj = cache->get(ref.object);
  if (!obj) {
    auto fetched = store.get(ref.object);
    if (!fetched.ok()) return fetched.error();
    obj = std::make_shared<const std::vector<std::uint8_t>>(fetched.take());
    if (cache) cache->put(ref.object, obj);
  }
  if (!validate_object_ref(ref, obj->size())) {
    return make_error(ErrorCode::kProtocolError, "byte range outside object");
  }
  return std::vector<std::uint8_t>(obj->begin() + static_cast<std::ptrdiff_t>(ref.offset),
                                   obj->begin() + static_cast<std::ptrdiff_t>(ref.offset + ref.length));
}

}  // namespace bolt
