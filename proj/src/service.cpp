#include "bolt/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "bolt/net.hpp"
#include "bolt/util/bytes.hpp"

namespace bolt {

BrokerPlacement::BrokerPlacement(std::size_t root_brokers, std::size_t fork_brokers)
    : root_pool_(root_brokers == 0 ? 1 : root_brokers),
      fork_pool_(fork_brokers),
      next_dynamic_(root_pool_ + fork_pool_) {}

std::size_t BrokerPlacement::place_root(LogId root) {
  std::size_t b = next_root_++ % root_pool_;
  assignment_[root] = b;
  return b;
}

std::size_t BrokerPlacement::place_fork(LogId fork, LogId root_ancestor, bool dedicated) {
  std::size_t b;
  if (dedicated) {
    b = next_dynamic_++;
  } else if (fork_pool_ > 0) {
    b = root_pool_ + static_cast<std::size_t>(root_ancestor % fork_pool_);
  } else {
    // Pools exhausted: fall back to a root-pool broker, avoiding the root's
    // own when there is an alternative.
    auto it = assignment_.find(root_ancestor);
    std::size_t root_broker = it == assignment_.end() ? 0 : it->second;
    b = root_pool_ > 1 ? (root_broker + 1) % root_pool_ : root_broker;
  }
  assignment_[fork] = b;
  return b;
}

std::optional<std::size_t> BrokerPlacement::broker_of(LogId log) const {
  auto it = assignment_.find(log);
  if (it == assignment_.end()) return std::nullopt;
  return it->second;
}

Result<std::unique_ptr<Service>> Service::start(ServiceConfig cfg) {
  auto svc = std::unique_ptr<Service>(new Service());
  svc->cfg_ = cfg;

  if (cfg.store == "mem") {
    svc->store_ = std::make_unique<MemObjectStore>();
  } else if (cfg.store.rfind("fs:", 0) == 0) {
    auto fs = FsObjectStore::open(cfg.store.substr(3));
    if (!fs.ok()) return fs.error();
    svc->store_ = fs.take();
  } else {
    return make_error(ErrorCode::kProtocolError, "unknown store backend: " + cfg.store);
  }

  std::unique_ptr<CommandLog> cmdlog;
  if (cfg.cmdlog_path.empty()) {
    cmdlog = std::make_unique<MemCommandLog>();
  } else {
    auto file = FileCommandLog::open(cfg.cmdlog_path, cfg.fsync);
    if (!file.ok()) return file.error();
    cmdlog = file.take();
  }
  EngineOptions eopts;
  eopts.initial_roots = cfg.initial_roots;
  eopts.snapshot_path = cfg.snapshot_path;
  auto engine = Engine::open(std::move(cmdlog), eopts);
  if (!engine.ok()) return engine.error();
  svc->engine_ = engine.take();

  svc->placement_ = std::make_unique<BrokerPlacement>(cfg.root_brokers, cfg.fork_brokers);
  // Place every live log recovered from the command log; roots first, then
  // forks in id order so placement is stable across restarts.
  svc->engine_->with_state([&](const ForestState& st) {
    for (LogId id : st.live_logs()) {
      const LogDescriptor* d = st.find_descriptor(id);
      if (d->kind == LogKind::kRoot) {
        svc->placement_->place_root(id);
      } else {
        svc->placement_->place_fork(id, root_ancestor_in(st, id), false);
      }
    }
    return 0;
  });
  svc->ensure_broker(svc->placement_->total_brokers() - 1);

  svc->listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (svc->listen_fd_ < 0) return make_error(ErrorCode::kStorageFailure, "socket failed");
  int one = 1;
  ::setsockopt(svc->listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(cfg.port);
  if (::inet_pton(AF_INET, cfg.host.c_str(), &addr.sin_addr) != 1) {
    return make_error(ErrorCode::kProtocolError, "bad listen address: " + cfg.host);
  }
  if (::bind(svc->listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    return make_error(ErrorCode::kStorageFailure,
                      std::string("bind: ") + std::strerror(errno));
  }
  if (::listen(svc->listen_fd_, 128) != 0) {
    return make_error(ErrorCode::kStorageFailure, "listen failed");
  }
  socklen_t alen = sizeof(addr);
  ::getsockname(svc->listen_fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
  svc->port_ = ntohs(addr.sin_port);

  svc->acceptor_ = std::thread([s = svc.get()] { s->accept_loop(); });
  return svc;
}

Service::~Service() { stop(); }

void Service::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard<std::mutex> lock(conns_mu_);
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : conn_threads_) {
    if (t.joinable()) t.join();
  }
}

std::size_t Service::broker_count() const {
  std::lock_guard<std::mutex> lock(brokers_mu_);
  return brokers_.size();
}

Broker& Service::broker(std::size_t i) {
  std::lock_guard<std::mutex> lock(brokers_mu_);
  return *brokers_.at(i);
}

std::optional<std::size_t> Service::broker_of(LogId log) const {
  std::lock_guard<std::mutex> lock(brokers_mu_);
  return placement_->broker_of(log);
}

std::size_t Service::ensure_broker(std::size_t index) {
  std::lock_guard<std::mutex> lock(brokers_mu_);
  while (brokers_.size() <= index) {
    BrokerOptions bopts;
    bopts.flush_bytes = cfg_.flush_bytes;
    bopts.linger = std::chrono::milliseconds(cfg_.linger_ms);
    bopts.cache_bytes = cfg_.cache_bytes;
    bopts.rng_seed = cfg_.broker_seed ? cfg_.broker_seed + brokers_.size() : 0;
    brokers_.push_back(std::make_unique<Broker>(brokers_.size(), *engine_, *store_, bopts));
  }
  return index;
}

LogId Service::root_ancestor_in(const ForestState& st, LogId log) {
  LogId cur = log;
  while (const LogDescriptor* d = st.find_descriptor(cur)) {
    if (d->parent == kNoLog) break;
    cur = d->parent;
  }
  return cur;
}

Broker& Service::broker_for(LogId log) {
  std::optional<std::size_t> b;
  {
    std::lock_guard<std::mutex> lock(brokers_mu_);
    b = placement_->broker_of(log);
  }
  std::size_t index = b.value_or(0);
  ensure_broker(index);
  return broker(index);
}

void Service::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_.load()) return;
      if (errno == EINTR) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard<std::mutex> lock(conns_mu_);
    if (stopping_.load()) {
      ::close(fd);
      return;
    }
    conn_fds_.push_back(fd);
    conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Service::serve_connection(int fd) {
  for (;;) {
    auto frame = read_frame(fd);
    if (!frame.ok()) break;  // closed or unrecoverable framing
    auto req = decode_request(frame.value());
    Response res;
    if (!req.ok()) {
      // Malformed body inside a well-delimited frame: report and keep the
      // connection alive.
      std::uint64_t request_id = 0;
      if (frame.value().size() >= 8) {
        ByteReader r(frame.value());
        (void)r.u64(&request_id);
      }
      res = error_response(request_id, req.error());
    } else {
      res = handle(req.value());
    }
    auto bytes = encode_response(res);
    if (!write_frame(fd, bytes).is_ok()) break;
  }
  ::close(fd);
}

Response Service::handle(const Request& req) {
  Response res;
  res.request_id = req.request_id;
  switch (req.op) {
    case Opcode::kAppend: {
      const auto& b = std::get<AppendReq>(req.body);
      auto ack = broker_for(b.log).append(b.log, b.payload);
      if (!ack.ok()) return error_response(req.request_id, ack.error());
      OkAppend ok;
      if (!ack.value().withheld) ok.position = ack.value().position;
      res.body = ok;
      return res;
    }
    case Opcode::kRead: {
      const auto& b = std::get<ReadReq>(req.body);
      auto records = broker_for(b.log).read(b.log, b.from, b.to);
      if (!records.ok()) return error_response(req.request_id, records.error());
      res.body = OkRead{records.take()};
      return res;
    }
    case Opcode::kCFork: {
      const auto& b = std::get<CForkReq>(req.body);
      ApplyResult r = engine_->submit(CreateCFork{b.parent, b.promotable});
      if (!r.ok()) return error_response(req.request_id, *r.error);
      LogId id = *r.created;
      LogId root = engine_->with_state([&](const ForestState& st) {
        return root_ancestor_in(st, id);
      });
      std::size_t broker_index;
      {
        std::lock_guard<std::mutex> lock(brokers_mu_);
        broker_index = placement_->place_fork(id, root, b.dedicated);
      }
      ensure_broker(broker_index);
      res.body = OkFork{id};
      return res;
    }
    case Opcode::kSFork: {
      const auto& b = std::get<SForkReq>(req.body);
      ApplyResult r = engine_->submit(CreateSFork{b.parent, b.past});
      if (!r.ok()) return error_response(req.request_id, *r.error);
      LogId id = *r.created;
      LogId root = engine_->with_state([&](const ForestState& st) {
        return root_ancestor_in(st, id);
      });
      std::size_t broker_index;
      {
        std::lock_guard<std::mutex> lock(brokers_mu_);
        broker_index = placement_->place_fork(id, root, b.dedicated);
      }
      ensure_broker(broker_index);
      res.body = OkFork{id};
      return res;
    }
    case Opcode::kPromote: {
      const auto& b = std::get<LogReq>(req.body);
      ApplyResult r = engine_->submit(Promote{b.log});
      if (!r.ok()) return error_response(req.request_id, *r.error);
      res.body = OkPromote{};
      return res;
    }
    case Opcode::kSquash: {
      const auto& b = std::get<LogReq>(req.body);
      ApplyResult r = engine_->submit(Squash{b.log});
      if (!r.ok()) return error_response(req.request_id, *r.error);
      res.body = OkSquash{r.squashed};
      return res;
    }
    case Opcode::kGetTail: {
      const auto& b = std::get<LogReq>(req.body);
      auto t = engine_->get_tail(b.log);
      if (!t.ok()) return error_response(req.request_id, t.error());
      OkTail ok;
      if (!t.value().withheld) ok.tail = t.value().value;
      res.body = ok;
      return res;
    }
    case Opcode::kDescribe: {
      OkDescribe ok = engine_->with_state([&](const ForestState& st) {
        OkDescribe d;
        for (LogId id : st.live_logs()) {
          const LogDescriptor* desc = st.find_descriptor(id);
          LogInfo info;
          info.id = id;
          info.kind = desc->kind;
          info.parent = desc->parent;
          info.fork_point = desc->fork_point;
          info.promotable = desc->promotable;
          info.status = desc->status;
          auto tail = st.get_tail(id);
          if (tail.ok() && !tail.value().withheld) info.tail = tail.value().value;
          d.logs.push_back(info);
        }
        return d;
      });
      {
        std::lock_guard<std::mutex> lock(brokers_mu_);
        for (LogInfo& info : ok.logs) {
          info.broker = placement_->broker_of(info.id).value_or(0);
        }
      }
      res.body = std::move(ok);
      return res;
    }
  }
  return error_response(req.request_id, make_error(ErrorCode::kProtocolError, "bad opcode"));
}

}  // namespace bolt
