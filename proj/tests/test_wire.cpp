#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bolt/wire.hpp"

using namespace bolt;

namespace {

std::vector<std::uint8_t> rand_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::vector<std::uint8_t> out(rng() % (max_len + 1));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

std::optional<Position> rand_opt(std::mt19937_64& rng) {
  if (rng() % 2) return std::nullopt;
  return Position{rng() % 1000};
}

Request rand_request(std::mt19937_64& rng) {
  Request req;
  req.request_id = rng();
  switch (rng() % 8) {
    case 0:
      req.op = Opcode::kAppend;
      req.body = AppendReq{rng(), rand_bytes(rng, 64)};
      break;
    case 1:
      req.op = Opcode::kRead;
      req.body = ReadReq{rng(), rng() % 100, rng() % 100};
      break;
    case 2:
      req.op = Opcode::kCFork;
      req.body = CForkReq{rng(), rng() % 2 == 0, rng() % 2 == 0};
      break;
    case 3:
      req.op = Opcode::kSFork;
      req.body = SForkReq{rng(), rand_opt(rng), rng() % 2 == 0};
      break;
    case 4:
      req.op = Opcode::kPromote;
      req.body = LogReq{rng()};
      break;
    case 5:
      req.op = Opcode::kSquash;
      req.body = LogReq{rng()};
      break;
    case 6:
      req.op = Opcode::kGetTail;
      req.body = LogReq{rng()};
      break;
    default:
      req.op = Opcode::kDescribe;
      req.body = DescribeReq{};
      break;
  }
  return req;
}

Response rand_ok_response(std::mt19937_64& rng, Opcode op) {
  Response res;
  res.request_id = rng();
  switch (op) {
    case Opcode::kAppend: {
      res.body = OkAppend{rand_opt(rng)};
      break;
    }
    case Opcode::kRead: {
      OkRead b;
      std::size_t n = rng() % 4;
      for (std::size_t i = 0; i < n; ++i) b.records.push_back(rand_bytes(rng, 32));
      res.body = std::move(b);
      break;
    }
    case Opcode::kCFork:
    case Opcode::kSFork:
      res.body = OkFork{rng()};
      break;
    case Opcode::kPromote:
      res.body = OkPromote{};
      break;
    case Opcode::kSquash: {
      OkSquash b;
      std::size_t n = rng() % 5;
      for (std::size_t i = 0; i < n; ++i) b.ids.push_back(rng());
      res.body = std::move(b);
      break;
    }
    case Opcode::kGetTail:
      res.body = OkTail{rand_opt(rng)};
      break;
    case Opcode::kDescribe: {
      OkDescribe b;
      std::size_t n = rng() % 4;
      for (std::size_t i = 0; i < n; ++i) {
        LogInfo info;
        info.id = rng();
        info.kind = static_cast<LogKind>(rng() % 3);
        info.parent = rng() % 5;
        info.fork_point = rand_opt(rng);
        info.promotable = rng() % 2 == 0;
        info.status = static_cast<LogStatus>(rng() % 3);
        info.tail = rand_opt(rng);
        info.broker = rng() % 8;
        b.logs.push_back(info);
      }
      res.body = std::move(b);
      break;
    }
  }
  return res;
}

}  // namespace

TEST_CASE("request encode/decode is the identity") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 3000; ++i) {
    Request req = rand_request(rng);
    auto decoded = decode_request(encode_request(req));
    REQUIRE(decoded.ok());
    CHECK(decoded.value().request_id == req.request_id);
    CHECK(decoded.value().op == req.op);
    CHECK(decoded.value().body == req.body);
  }
}

TEST_CASE("ok response encode/decode is the identity") {
  std::mt19937_64 rng(99);
  const Opcode all[] = {Opcode::kAppend, Opcode::kRead,    Opcode::kCFork,
                        Opcode::kSFork,  Opcode::kPromote, Opcode::kSquash,
                        Opcode::kGetTail, Opcode::kDescribe};
  for (int i = 0; i < 3000; ++i) {
    Opcode op = all[rng() % 8];
    Response res = rand_ok_response(rng, op);
    auto decoded = decode_response(encode_response(res), op);
    REQUIRE(decoded.ok());
    CHECK(decoded.value().request_id == res.request_id);
    CHECK(decoded.value().status == 0);
    CHECK(decoded.value().body == res.body);
  }
}

TEST_CASE("error responses carry code, boundary and detail") {
  EngineError err =
      make_error(ErrorCode::kBlockedByPromotableFork, "beyond the fork point", Position{17});
  Response res = error_response(42, err);
  auto decoded = decode_response(encode_response(res), Opcode::kRead);
  REQUIRE(decoded.ok());
  CHECK(decoded.value().request_id == 42);
  CHECK_FALSE(decoded.value().ok());
  EngineError back = decoded.value().to_error();
  CHECK(back.code == ErrorCode::kBlockedByPromotableFork);
  CHECK(back.boundary == Position{17});
  CHECK(back.detail == "beyond the fork point");
}

TEST_CASE("truncated frames are rejected") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    Request req = rand_request(rng);
    auto bytes = encode_request(req);
    bytes.resize(rng() % bytes.size());
    auto decoded = decode_request(bytes);
    if (decoded.ok()) {
      // Only acceptable if truncation produced another valid frame, which
      // cannot happen for a prefix shorter than the header.
      CHECK(bytes.size() >= 9);
    }
  }
  CHECK_FALSE(decode_request({}).ok());
}
