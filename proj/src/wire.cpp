#include "bolt/wire.hpp"

#include "bolt/util/bytes.hpp"

namespace bolt {

namespace {

EngineError malformed(const char* what) {
  return make_error(ErrorCode::kProtocolError, std::string("frame: ") + what);
}

void put_opt_u64(ByteWriter& w, const std::optional<std::uint64_t>& v) {
  w.u8(v.has_value() ? 1 : 0);
  w.u64(v.value_or(0));
}

bool get_opt_u64(ByteReader& r, std::optional<std::uint64_t>* out) {
  std::uint8_t has = 0;
  std::uint64_t v = 0;
  if (!r.u8(&has) || !r.u64(&v)) return false;
  if (has) {
    *out = v;
  } else {
    out->reset();
  }
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_request(const Request& req) {
  ByteWriter w;
  w.u64(req.request_id);
  w.u8(static_cast<std::uint8_t>(req.op));
  std::visit(
      [&w](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, AppendReq>) {
          w.u64(b.log);
          w.bytes32(b.payload);
        } else if constexpr (std::is_same_v<T, ReadReq>) {
          w.u64(b.log);
          w.u64(b.from);
          w.u64(b.to);
        } else if constexpr (std::is_same_v<T, CForkReq>) {
          w.u64(b.parent);
          w.u8(b.promotable ? 1 : 0);
          w.u8(b.dedicated ? 1 : 0);
        } else if constexpr (std::is_same_v<T, SForkReq>) {
          w.u64(b.parent);
          put_opt_u64(w, b.past);
          w.u8(b.dedicated ? 1 : 0);
        } else if constexpr (std::is_same_v<T, LogReq>) {
          w.u64(b.log);
        }
      },
      req.body);
  return w.take();
}

Result<Request> decode_request(std::span<const std::uint8_t> frame) {
  ByteReader r(frame);
  Request req;
  std::uint8_t op = 0;
  if (!r.u64(&req.request_id) || !r.u8(&op)) return malformed("short header");
  req.op = static_cast<Opcode>(op);
  switch (req.op) {
    case Opcode::kAppend: {
      AppendReq b;
      if (!r.u64(&b.log) || !r.bytes32(&b.payload) || !r.exhausted()) return malformed("append");
      req.body = std::move(b);
      return req;
    }
    case Opcode::kRead: {
      ReadReq b;
      if (!r.u64(&b.log) || !r.u64(&b.from) || !r.u64(&b.to) || !r.exhausted()) {
        return malformed("read");
      }
      req.body = b;
      return req;
    }
    case Opcode::kCFork: {
      CForkReq b;
      std::uint8_t promotable = 0;
      std::uint8_t dedicated = 0;
      if (!r.u64(&b.parent) || !r.u8(&promotable) || !r.u8(&dedicated) || !r.exhausted()) {
        return malformed("cfork");
      }
      b.promotable = promotable != 0;
      b.dedicated = dedicated != 0;
      req.body = b;
      return req;
    }
    case Opcode::kSFork: {
      SForkReq b;
      std::uint8_t dedicated = 0;
      if (!r.u64(&b.parent) || !get_opt_u64(r, &b.past) || !r.u8(&dedicated) || !r.exhausted()) {
        return malformed("sfork");
      }
      b.dedicated = dedicated != 0;
      req.body = b;
      return req;
    }
    case Opcode::kPromote:
    case Opcode::kSquash:
    case Opcode::kGetTail: {
      LogReq b;
      if (!r.u64(&b.log) || !r.exhausted()) return malformed("log op");
      req.body = b;
      return req;
    }
    case Opcode::kDescribe: {
      if (!r.exhausted()) return malformed("describe");
      req.body = DescribeReq{};
      return req;
    }
  }
  return malformed("bad opcode");
}

std::vector<std::uint8_t> encode_response(const Response& res) {
  ByteWriter w;
  w.u64(res.request_id);
  w.u8(res.status);
  if (res.status != 0) {
    put_opt_u64(w, res.boundary);
    w.str32(res.detail);
    return w.take();
  }
  std::visit(
      [&w](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, OkAppend>) {
          put_opt_u64(w, b.position);
        } else if constexpr (std::is_same_v<T, OkRead>) {
          w.u32(static_cast<std::uint32_t>(b.records.size()));
          for (const auto& rec : b.records) w.bytes32(rec);
        } else if constexpr (std::is_same_v<T, OkFork>) {
          w.u64(b.id);
        } else if constexpr (std::is_same_v<T, OkSquash>) {
          w.u32(static_cast<std::uint32_t>(b.ids.size()));
          for (LogId id : b.ids) w.u64(id);
        } else if constexpr (std::is_same_v<T, OkTail>) {
          put_opt_u64(w, b.tail);
        } else if constexpr (std::is_same_v<T, OkDescribe>) {
          w.u32(static_cast<std::uint32_t>(b.logs.size()));
          for (const LogInfo& info : b.logs) {
            w.u64(info.id);
            w.u8(static_cast<std::uint8_t>(info.kind));
            w.u64(info.parent);
            put_opt_u64(w, info.fork_point);
            w.u8(info.promotable ? 1 : 0);
            w.u8(static_cast<std::uint8_t>(info.status));
            put_opt_u64(w, info.tail);
            w.u64(info.broker);
          }
        }
      },
      res.body);
  return w.take();
}

Result<Response> decode_response(std::span<const std::uint8_t> frame, Opcode op) {
  ByteReader r(frame);
  Response res;
  if (!r.u64(&res.request_id) || !r.u8(&res.status)) return malformed("short header");
  if (res.status != 0) {
    if (!get_opt_u64(r, &res.boundary) || !r.str32(&res.detail) || !r.exhausted()) {
      return malformed("error body");
    }
    return res;
  }
  switch (op) {
    case Opcode::kAppend: {
      OkAppend b;
      if (!get_opt_u64(r, &b.position) || !r.exhausted()) return malformed("append body");
      res.body = b;
      return res;
    }
    case Opcode::kRead: {
      OkRead b;
      std::uint32_t n = 0;
      if (!r.u32(&n)) return malformed("read body");
      b.records.resize(n);
      for (auto& rec : b.records) {
        if (!r.bytes32(&rec)) return malformed("read body");
      }
      if (!r.exhausted()) return malformed("read body");
      res.body = std::move(b);
      return res;
    }
    case Opcode::kCFork:
    case Opcode::kSFork: {
      OkFork b;
      if (!r.u64(&b.id) || !r.exhausted()) return malformed("fork body");
      res.body = b;
      return res;
    }
    case Opcode::kPromote: {
      if (!r.exhausted()) return malformed("promote body");
      res.body = OkPromote{};
      return res;
    }
    case Opcode::kSquash: {
      OkSquash b;
      std::uint32_t n = 0;
      if (!r.u32(&n)) return malformed("squash body");
      b.ids.resize(n);
      for (LogId& id : b.ids) {
        if (!r.u64(&id)) return malformed("squash body");
      }
      if (!r.exhausted()) return malformed("squash body");
      res.body = std::move(b);
      return res;
    }
    case Opcode::kGetTail: {
      OkTail b;
      if (!get_opt_u64(r, &b.tail) || !r.exhausted()) return malformed("tail body");
      res.body = b;
      return res;
    }
    case Opcode::kDescribe: {
      OkDescribe b;
      std::uint32_t n = 0;
      if (!r.u32(&n)) return malformed("describe body");
      b.logs.resize(n);
      for (LogInfo& info : b.logs) {
        std::uint8_t kind = 0;
        std::uint8_t promotable = 0;
        std::uint8_t status = 0;
        if (!r.u64(&info.id) || !r.u8(&kind) || !r.u64(&info.parent) ||
            !get_opt_u64(r, &info.fork_point) || !r.u8(&promotable) || !r.u8(&status) ||
            !get_opt_u64(r, &info.tail) || !r.u64(&info.broker)) {
          return malformed("describe body");
        }
        info.kind = static_cast<LogKind>(kind);
        info.promotable = promotable != 0;
        info.status = static_cast<LogStatus>(status);
      }
      if (!r.exhausted()) return malformed("describe body");
      res.body = std::move(b);
      return res;
    }
  }
  return malformed("bad opcode");
}

Response error_response(std::uint64_t request_id, const EngineError& err) {
  Response res;
  res.request_id = request_id;
  res.status = static_cast<std::uint8_t>(err.code);
  res.boundary = err.boundary;
  res.detail = err.detail;
  return res;
}

}  // namespace bolt
