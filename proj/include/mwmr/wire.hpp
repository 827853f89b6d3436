#pragma once

// Binary frame codec for ProtocolMessage. All integers big-endian.
//
//   u32 length            bytes after this field
//   u8  kind
//   u8  sender role
//   u16 sender index
//   u32 op_seq
//   u8  flags             bit0: tag present, bit1: confirmed present
//   [tag]                 u64 ts, u16 wid, u32 wseq        (bit0)
//   u16 value length, value bytes
//   u16 inprogress count, per entry: u16 writer, tag, u16 value length, value bytes
//   [confirmed tag]                                         (bit1)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwmr/protocols.hpp"

namespace mwmr {

class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kFrameHeaderSize = 4;
/// Frames above this length are rejected before buffering.
inline constexpr std::uint32_t kMaxFrameLength = 16u << 20;

/// Throws std::invalid_argument when a field does not fit its wire width.
std::vector<std::uint8_t> encode_frame(const ProtocolMessage& msg);
/// Appends the encoded frame to `out`.
void append_frame(std::vector<std::uint8_t>& out, const ProtocolMessage& msg);

/// Decodes exactly one complete frame. Throws FrameError on a truncated frame, a length
/// mismatch, an unknown kind or role, or unknown flag bits.
ProtocolMessage decode_frame(std::span<const std::uint8_t> bytes);

/// Reassembles frames from a byte stream.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete message, or nothing when more bytes are needed. Throws FrameError.
    std::optional<ProtocolMessage> next();
    std::size_t buffered() const { return buffer_.size() - offset_; }

private:
    std::vector<std::uint8_t> buffer_;
    std::size_t offset_ = 0;
};

}  // namespace mwmr
