#include "bolt/client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "bolt/net.hpp"
#include "bolt/util/bytes.hpp"

namespace bolt {

Result<std::unique_ptr<BoltClient>> BoltClient::connect(const std::string& host,
                                                        std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return make_error(ErrorCode::kStorageFailure, "socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return make_error(ErrorCode::kProtocolError, "bad address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return make_error(ErrorCode::kStorageFailure,
                      std::string("connect: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  auto client = std::unique_ptr<BoltClient>(new BoltClient());
  client->fd_ = fd;
  client->reader_ = std::thread([c = client.get()] { c->reader_main(); });
  return client;
}

BoltClient::~BoltClient() {
  closed_.store(true);
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  if (fd_ >= 0) ::close(fd_);
}

void BoltClient::reader_main() {
  for (;;) {
    auto frame = read_frame(fd_);
    if (!frame.ok()) break;
    std::uint64_t request_id = 0;
    {
      ByteReader r(frame.value());
      if (!r.u64(&request_id)) continue;
    }
    std::shared_ptr<Waiter> waiter;
    Opcode op{};
    {
      std::lock_guard<std::mutex> lock(waiters_mu_);
      auto it = waiters_.find(request_id);
      if (it == waiters_.end()) continue;  // stray response
      op = it->second.first;
      waiter = it->second.second;
      waiters_.erase(it);
    }
    auto res = decode_response(frame.value(), op);
    {
      std::lock_guard<std::mutex> lock(waiter->mu);
      waiter->result = std::move(res);
      waiter->done = true;
    }
    waiter->cv.notify_all();
  }
  // Fail everything still in flight.
  std::map<std::uint64_t, std::pair<Opcode, std::shared_ptr<Waiter>>> orphans;
  {
    std::lock_guard<std::mutex> lock(waiters_mu_);
    orphans.swap(waiters_);
  }
  for (auto& [id, entry] : orphans) {
    auto& waiter = entry.second;
    std::lock_guard<std::mutex> lock(waiter->mu);
    waiter->result = make_error(ErrorCode::kStorageFailure, "connection lost");
    waiter->done = true;
    waiter->cv.notify_all();
  }
}

Result<Response> BoltClient::call(Opcode op, Request req) {
  if (closed_.load()) return make_error(ErrorCode::kStorageFailure, "client closed");
  req.request_id = next_id_.fetch_add(1);
  req.op = op;
  auto waiter = std::make_shared<Waiter>();
  {
    std::lock_guard<std::mutex> lock(waiters_mu_);
    waiters_[req.request_id] = {op, waiter};
  }
  auto bytes = encode_request(req);
  {
    std::lock_guard<std::mutex> lock(write_mu_);
    if (Status s = write_frame(fd_, bytes); !s.is_ok()) {
      std::lock_guard<std::mutex> wlock(waiters_mu_);
      waiters_.erase(req.request_id);
      return s.error();
    }
  }
  std::unique_lock<std::mutex> lock(waiter->mu);
  waiter->cv.wait(lock, [&] { return waiter->done; });
  return std::move(waiter->result);
}

Result<std::optional<Position>> BoltClient::append(LogId log,
                                                   std::span<const std::uint8_t> payload) {
  Request req;
  req.body = AppendReq{log, {payload.begin(), payload.end()}};
  auto res = call(Opcode::kAppend, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkAppend>(res.value().body).position;
}

Result<std::vector<std::vector<std::uint8_t>>> BoltClient::read(LogId log, Position from,
                                                                Position to) {
  Request req;
  req.body = ReadReq{log, from, to};
  auto res = call(Opcode::kRead, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkRead>(res.take().body).records;
}

Result<LogId> BoltClient::cfork(LogId parent, bool promotable, bool dedicated) {
  Request req;
  req.body = CForkReq{parent, promotable, dedicated};
  auto res = call(Opcode::kCFork, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkFork>(res.value().body).id;
}

Result<LogId> BoltClient::sfork(LogId parent, std::optional<Position> past, bool dedicated) {
  Request req;
  req.body = SForkReq{parent, past, dedicated};
  auto res = call(Opcode::kSFork, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkFork>(res.value().body).id;
}

Status BoltClient::promote(LogId log) {
  Request req;
  req.body = LogReq{log};
  auto res = call(Opcode::kPromote, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return Status::ok();
}

Result<std::vector<LogId>> BoltClient::squash(LogId log) {
  Request req;
  req.body = LogReq{log};
  auto res = call(Opcode::kSquash, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkSquash>(res.take().body).ids;
}

Result<std::optional<Position>> BoltClient::get_tail(LogId log) {
  Request req;
  req.body = LogReq{log};
  auto res = call(Opcode::kGetTail, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkTail>(res.value().body).tail;
}

Result<std::vector<LogInfo>> BoltClient::describe() {
  Request req;
  req.body = DescribeReq{};
  auto res = call(Opcode::kDescribe, std::move(req));
  if (!res.ok()) return res.error();
  if (!res.value().ok()) return res.value().to_error();
  return std::get<OkDescribe>(res.take().body).logs;
}

}  // namespace bolt
