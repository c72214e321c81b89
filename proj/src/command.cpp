#include "bolt/command.hpp"

#include "bolt/util/bytes.hpp"

namespace bolt {

namespace {

constexpr std::uint8_t kTagSequenceBatch = 1;
constexpr std::uint8_t kTagCreateCFork = 2;
constexpr std::uint8_t kTagCreateSFork = 3;
constexpr std::uint8_t kTagPromote = 4;
constexpr std::uint8_t kTagSquash = 5;

}  // namespace

std::vector<std::uint8_t> encode_command(const Command& cmd) {
  ByteWriter w;
  std::visit(
      [&w](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SequenceBatch>) {
          w.u8(kTagSequenceBatch);
          w.u64(c.object.hi);
          w.u64(c.object.lo);
          w.u32(static_cast<std::uint32_t>(c.records.size()));
          for (const SequenceRecord& r : c.records) {
            w.u64(r.log);
            w.u64(r.offset);
            w.u64(r.length);
          }
        } else if constexpr (std::is_same_v<T, CreateCFork>) {
          w.u8(kTagCreateCFork);
          w.u64(c.parent);
          w.u8(c.promotable ? 1 : 0);
        } else if constexpr (std::is_same_v<T, CreateSFork>) {
          w.u8(kTagCreateSFork);
          w.u64(c.parent);
          w.u8(c.past.has_value() ? 1 : 0);
          w.u64(c.past.value_or(0));
        } else if constexpr (std::is_same_v<T, Promote>) {
          w.u8(kTagPromote);
          w.u64(c.child);
        } else {
          w.u8(kTagSquash);
          w.u64(c.log);
        }
      },
      cmd);
  return w.take();
}

Result<Command> decode_command(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::uint8_t tag = 0;
  if (!r.u8(&tag)) return make_error(ErrorCode::kProtocolError, "command: empty");
  switch (tag) {
    case kTagSequenceBatch: {
      SequenceBatch b;
      std::uint32_t n = 0;
      if (!r.u64(&b.object.hi) || !r.u64(&b.object.lo) || !r.u32(&n)) break;
      if (r.remaining() != std::size_t{n} * 24) break;
      b.records.resize(n);
      for (SequenceRecord& rec : b.records) {
        if (!r.u64(&rec.log) || !r.u64(&rec.offset) || !r.u64(&rec.length)) break;
      }
      return Command{std::move(b)};
    }
    case kTagCreateCFork: {
      CreateCFork c;
      std::uint8_t p = 0;
      if (!r.u64(&c.parent) || !r.u8(&p) || !r.exhausted()) break;
      c.promotable = p != 0;
      return Command{c};
    }
    case kTagCreateSFork: {
      CreateSFork c;
      std::uint8_t has_past = 0;
      std::uint64_t past = 0;
      if (!r.u64(&c.parent) || !r.u8(&has_past) || !r.u64(&past) || !r.exhausted()) break;
      if (has_past) c.past = past;
      return Command{c};
    }
    case kTagPromote: {
      Promote c;
      if (!r.u64(&c.child) || !r.exhausted()) break;
      return Command{c};
    }
    case kTagSquash: {
      Squash c;
      if (!r.u64(&c.log) || !r.exhausted()) break;
      return Command{c};
    }
    default:
      return make_error(ErrorCode::kProtocolError, "command: bad tag");
  }
  return make_error(ErrorCode::kProtocolError, "command: truncated");
}

}  // namespace bolt
