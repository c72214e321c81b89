#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

// Length-prefixed frame I/O over a connected socket.
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

// Reads one [u32 length][payload] frame. An empty result with ok() and an
// empty payload never occurs; a cleanly closed peer yields StorageFailure.
Result<std::vector<std::uint8_t>> read_frame(int fd);
Status write_frame(int fd, std::span<const std::uint8_t> payload);

}  // namespace bolt
