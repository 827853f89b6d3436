#pragma once

// Shared vocabulary: process identities, tags, values and history records.

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mwmr {

/// A peer broke a protocol contract (e.g. a reply that cannot belong to the request).
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Role : std::uint8_t { Reader = 0, Writer = 1, Server = 2 };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct ProcessId {
    Role role = Role::Reader;
    std::uint32_t index = 0;

    friend constexpr auto operator<=>(const ProcessId&, const ProcessId&) = default;
};

inline constexpr ProcessId reader(std::uint32_t i) { return {Role::Reader, i}; }
inline constexpr ProcessId writer(std::uint32_t i) { return {Role::Writer, i}; }
inline constexpr ProcessId server(std::uint32_t i) { return {Role::Server, i}; }

/// Identity of one write operation: the writer and its per-writer counter (starts at 1).
struct WriteId {
    std::uint32_t writer = 0;
    std::uint32_t seq = 0;

    friend constexpr auto operator<=>(const WriteId&, const WriteId&) = default;
};

/// Version label. Ordered lexicographically by (ts, wid, wseq).
struct Tag {
    std::uint64_t ts = 0;
    std::uint32_t wid = 0;
    std::uint32_t wseq = 0;

    friend constexpr auto operator<=>(const Tag&, const Tag&) = default;

    constexpr bool is_initial() const { return ts == 0 && wid == 0 && wseq == 0; }
    constexpr WriteId write_id() const { return {wid, wseq}; }
};

inline constexpr Tag kInitialTag{};

std::strong_ordering compare_tags(const Tag& a, const Tag& b);

/// Tag for a writer that has observed `max_seen` as the largest tag.
/// Throws std::invalid_argument if `writer` is not a Writer.
Tag next_tag(const Tag& max_seen, const ProcessId& writer, std::uint32_t wseq);

std::string to_string(const Tag& tag);

struct TaggedValue {
    Tag tag;
    std::string value;

    friend bool operator==(const TaggedValue&, const TaggedValue&) = default;
};

enum class EventKind : std::uint8_t { ReadInvoke, ReadRespond, WriteInvoke, WriteRespond };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

constexpr bool is_invoke(EventKind k) {
    return k == EventKind::ReadInvoke || k == EventKind::WriteInvoke;
}
constexpr bool is_read(EventKind k) {
    return k == EventKind::ReadInvoke || k == EventKind::ReadRespond;
}

using Nanos = std::chrono::nanoseconds;

/// Exact decimal seconds, e.g. 1.250000000.
std::string format_seconds(Nanos t);
/// Parses a decimal seconds string exactly to nanoseconds (at most 9 fraction digits).
Nanos parse_seconds(std::string_view text);
Nanos seconds(double s);

struct HistoryEvent {
    ProcessId process;
    std::uint32_t op_seq = 0;
    EventKind kind = EventKind::ReadInvoke;
    Nanos time{0};
    Tag tag;                  // respond events only
    std::uint8_t rounds = 0;  // respond events only, 1 or 2

    friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

}  // namespace mwmr
