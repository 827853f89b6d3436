#include "mwmr/wire.hpp"

#include <cstring>

namespace mwmr {

namespace {

constexpr std::uint8_t kFlagTag = 0x01;
constexpr std::uint8_t kFlagConfirmed = 0x02;

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint64_t v, const char* field) {
        if (v > 0xFFFF) throw std::invalid_argument(std::string(field) + " does not fit in 16 bits");
        put(v, 2);
    }
    void u32(std::uint64_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void tag(const Tag& t) {
        u64(t.ts);
        u16(t.wid, "tag wid");
        u32(t.wseq);
    }
    void bytes(const std::string& s) {
        u16(s.size(), "value length");
        out_.insert(out_.end(), s.begin(), s.end());
    }

private:
    void put(std::uint64_t v, int n) {
        for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    Tag tag() {
        Tag t;
        t.ts = u64();
        t.wid = u16();
        t.wseq = u32();
        return t;
    }
    std::string bytes() {
        const auto n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw FrameError("truncated frame");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_++];
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

void append_frame(std::vector<std::uint8_t>& out, const ProtocolMessage& msg) {
    const auto start = out.size();
    out.resize(start + kFrameHeaderSize);
    Writer w(out);
    w.u8(static_cast<std::uint8_t>(msg.kind));
    w.u8(static_cast<std::uint8_t>(msg.sender.role));
    w.u16(msg.sender.index, "sender index");
    w.u32(msg.op_seq);
    w.u8((msg.tag ? kFlagTag : 0) | (msg.confirmed ? kFlagConfirmed : 0));
    if (msg.tag) w.tag(*msg.tag);
    w.bytes(msg.value);
    w.u16(msg.inprogress.size(), "inprogress count");
    for (const auto& e : msg.inprogress) {
        w.u16(e.writer, "inprogress writer");
        w.tag(e.entry.tag);
        w.bytes(e.entry.value);
    }
    if (msg.confirmed) w.tag(*msg.confirmed);
    const auto length = out.size() - start - kFrameHeaderSize;
    if (length > kMaxFrameLength) throw std::invalid_argument("frame too large");
    for (int i = 0; i < 4; ++i) out[start + i] = static_cast<std::uint8_t>(length >> (8 * (3 - i)));
}

std::vector<std::uint8_t> encode_frame(const ProtocolMessage& msg) {
    std::vector<std::uint8_t> out;
    append_frame(out, msg);
    return out;
}

ProtocolMessage decode_frame(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto length = r.u32();
    if (length != r.remaining()) throw FrameError("frame length mismatch");
    ProtocolMessage msg;
    const auto kind = r.u8();
    if (kind < static_cast<std::uint8_t>(MessageKind::ReadQuery) || kind > static_cast<std::uint8_t>(MessageKind::Ack)) {
        throw FrameError("unknown message kind " + std::to_string(kind));
    }
    msg.kind = static_cast<MessageKind>(kind);
    const auto role = r.u8();
    if (role > static_cast<std::uint8_t>(Role::Server)) throw FrameError("unknown sender role " + std::to_string(role));
    msg.sender.role = static_cast<Role>(role);
    msg.sender.index = r.u16();
    msg.op_seq = r.u32();
    const auto flags = r.u8();
    if (flags & ~(kFlagTag | kFlagConfirmed)) throw FrameError("unknown flag bits");
    if (flags & kFlagTag) msg.tag = r.tag();
    msg.value = r.bytes();
    const auto count = r.u16();
    msg.inprogress.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        InprogressEntry e;
        e.writer = r.u16();
        e.entry.tag = r.tag();
        e.entry.value = r.bytes();
        msg.inprogress.push_back(std::move(e));
    }
    if (flags & kFlagConfirmed) msg.confirmed = r.tag();
    if (r.remaining() != 0) throw FrameError("frame length mismatch");
    return msg;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    if (offset_ > 0 && offset_ == buffer_.size()) {
        buffer_.clear();
        offset_ = 0;
    }
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<ProtocolMessage> FrameReader::next() {
    const auto available = buffer_.size() - offset_;
    if (available < kFrameHeaderSize) return std::nullopt;
    std::uint32_t length = 0;
    for (std::size_t i = 0; i < kFrameHeaderSize; ++i) length = (length << 8) | buffer_[offset_ + i];
    if (length > kMaxFrameLength) throw FrameError("frame length exceeds limit");
    if (available < kFrameHeaderSize + length) return std::nullopt;
    auto msg = decode_frame(std::span(buffer_).subspan(offset_, kFrameHeaderSize + length));
    offset_ += kFrameHeaderSize + length;
    if (offset_ > (1u << 16) && offset_ * 2 > buffer_.size()) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
        offset_ = 0;
    }
    return msg;
}

}  // namespace mwmr
