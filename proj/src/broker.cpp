#include "bolt/broker.hpp"

#include <cstring>

#include "bolt/util/bytes.hpp"

namespace bolt {

namespace {

constexpr char kObjMagic[8] = {'B', 'O', 'L', 'T', 'O', 'B', 'J', '1'};
constexpr std::uint32_t kObjVersion = 1;
constexpr std::uint8_t kOpAppend = 1;  // mirrors the wire opcodes
constexpr std::uint8_t kOpRead = 2;

}  // namespace

std::vector<std::uint8_t> build_object_payload(const std::vector<ObjectEntry*>& entries) {
  ByteWriter w;
  w.raw(kObjMagic, 8);
  w.u32(kObjVersion);
  for (ObjectEntry* e : entries) {
    w.u64(e->log);
    w.u32(static_cast<std::uint32_t>(e->payload.size()));
    e->offset = w.size();
    w.raw(e->payload.data(), e->payload.size());
  }
  return w.take();
}

Result<std::vector<ObjectEntry>> parse_object_payload(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[8];
  std::uint32_t version = 0;
  if (!r.raw(magic, 8) || std::memcmp(magic, kObjMagic, 8) != 0 || !r.u32(&version) ||
      version != kObjVersion) {
    return make_error(ErrorCode::kProtocolError, "object header mismatch");
  }
  std::vector<ObjectEntry> out;
  while (!r.exhausted()) {
    ObjectEntry e;
    std::uint32_t len = 0;
    if (!r.u64(&e.log) || !r.u32(&len)) {
      return make_error(ErrorCode::kProtocolError, "object entry truncated");
    }
    e.offset = r.position();
    e.payload.resize(len);
    if (len && !r.raw(e.payload.data(), len)) {
      return make_error(ErrorCode::kProtocolError, "object entry truncated");
    }
    out.push_back(std::move(e));
  }
  return out;
}

Broker::Broker(std::size_t id, Engine& engine, ObjectStore& store, BrokerOptions opts)
    : id_(id),
      engine_(engine),
      store_(store),
      opts_(opts),
      cache_(opts.cache_bytes),
      rng_(opts.rng_seed ? opts.rng_seed : std::random_device{}()) {
  flusher_ = std::thread([this] { flusher_main(); });
}

Broker::~Broker() {
  {
    std::unique_lock<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  flusher_.join();
}

void Broker::note_request(std::uint8_t opcode, LogId log) {
  std::lock_guard<std::mutex> lock(log_mu_);
  request_log_.push_back(RequestLogEntry{opcode, log});
}

std::vector<RequestLogEntry> Broker::request_log() const {
  std::lock_guard<std::mutex> lock(log_mu_);
  return request_log_;
}

Result<AppendAck> Broker::append(LogId log, std::vector<std::uint8_t> payload) {
  note_request(kOpAppend, log);
  if (payload.empty()) {
    return make_error(ErrorCode::kProtocolError, "empty record payload");
  }
  auto pending = std::make_unique<Pending>();
  pending->entry.log = log;
  pending->entry.payload = std::move(payload);
  pending->enqueued = std::chrono::steady_clock::now();
  std::future<Result<AppendAck>> fut = pending->ack.get_future();
  {
    std::unique_lock<std::mutex> lock(mu_);
    pending_bytes_ += pending->entry.payload.size();
    pending_.push_back(std::move(pending));
    // The first entry arms the linger deadline; the flusher must wake for it.
    if (pending_.size() == 1 || pending_bytes_ >= opts_.flush_bytes) cv_.notify_all();
  }
  return fut.get();
}

void Broker::flusher_main() {
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    if (pending_.empty()) {
      if (stop_) return;
      cv_.wait(lock, [this] { return stop_ || !pending_.empty(); });
      continue;
    }
    auto deadline = pending_.front()->enqueued + opts_.linger;
    bool due = stop_ || pending_bytes_ >= opts_.flush_bytes ||
               std::chrono::steady_clock::now() >= deadline;
    if (!due) {
      cv_.wait_until(lock, deadline, [this] {
        return stop_ || pending_bytes_ >= opts_.flush_bytes;
      });
      continue;
    }
    flush_locked(lock);
  }
}

void Broker::flush_locked(std::unique_lock<std::mutex>& lock) {
  std::vector<std::unique_ptr<Pending>> batch;
  batch.swap(pending_);
  pending_bytes_ = 0;
  lock.unlock();

  std::vector<ObjectEntry*> entries;
  entries.reserve(batch.size());
  for (auto& p : batch) entries.push_back(&p->entry);
  std::vector<std::uint8_t> object = build_object_payload(entries);

  auto fail_all = [&](const EngineError& err) {
    for (auto& p : batch) p->ack.set_value(err);
  };

  // Durability ordering: the object must be stored before its records are
  // sequenced, or the index could reference bytes that do not exist yet.
  auto object_id = put_object(store_, object, rng_);
  if (!object_id.ok()) {
    fail_all(object_id.error());
    lock.lock();
    return;
  }
  ++objects_written_;

  SequenceBatch cmd;
  cmd.object = object_id.value();
  for (ObjectEntry* e : entries) {
    cmd.records.push_back(
        SequenceRecord{e->log, e->offset, static_cast<std::uint64_t>(e->payload.size())});
  }
  ApplyResult res = engine_.submit(cmd);
  if (res.ok()) {
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i]->ack.set_value(res.positions[i]);
  } else if (res.error->code == ErrorCode::kStorageFailure) {
    fail_all(*res.error);
  } else {
    // Commands are atomic, so one bad target fails the whole batch; resubmit
    // per record against the already durable object to isolate the errors.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      SequenceBatch one;
      one.object = cmd.object;
      one.records.push_back(cmd.records[i]);
      ApplyResult r1 = engine_.submit(one);
      if (r1.ok()) {
        batch[i]->ack.set_value(r1.positions[0]);
      } else {
        batch[i]->ack.set_value(*r1.error);
      }
    }
  }
  lock.lock();
}

Result<std::vector<std::vector<std::uint8_t>>> Broker::read(LogId log, Position from,
                                                            Position to) {
  note_request(kOpRead, log);
  auto refs = engine_.read_meta(log, from, to);
  if (!refs.ok()) return refs.error();
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(refs.value().size());
  // Contiguous ranges of the same object coalesce into one fetch.
  const auto& v = refs.value();
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i + 1;
    while (j < v.size() && v[j].object == v[i].object &&
           v[j].offset == v[j - 1].offset + v[j - 1].length) {
      ++j;
    }
    ObjectRef span_ref{v[i].object, v[i].offset,
                       v[j - 1].offset + v[j - 1].length - v[i].offset};
    auto bytes = get_range(store_, &cache_, span_ref);
    if (!bytes.ok()) return bytes.error();
    std::uint64_t base = v[i].offset;
    for (std::size_t k = i; k < j; ++k) {
      auto begin = bytes.value().begin() + static_cast<std::ptrdiff_t>(v[k].offset - base);
      out.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(v[k].length));
    }
    i = j;
  }
  return out;
}

}  // namespace bolt
