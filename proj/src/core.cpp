#include "mwmr/core.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mwmr {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::Reader: return "reader";
        case Role::Writer: return "writer";
        case Role::Server: return "server";
    }
    return "?";
}

Role role_from_string(std::string_view text) {
    if (text == "reader") return Role::Reader;
    if (text == "writer") return Role::Writer;
    if (text == "server") return Role::Server;
    throw std::invalid_argument("unknown role: " + std::string(text));
}

std::strong_ordering compare_tags(const Tag& a, const Tag& b) { return a <=> b; }

Tag next_tag(const Tag& max_seen, const ProcessId& w, std::uint32_t wseq) {
    if (w.role != Role::Writer) {
        throw std::invalid_argument("next_tag: process is not a writer");
    }
    return Tag{max_seen.ts + 1, w.index, wseq};
}

std::string to_string(const Tag& tag) {
    return "(" + std::to_string(tag.ts) + "," + std::to_string(tag.wid) + "," +
           std::to_string(tag.wseq) + ")";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::ReadInvoke: return "read_invoke";
        case EventKind::ReadRespond: return "read_respond";
        case EventKind::WriteInvoke: return "write_invoke";
        case EventKind::WriteRespond: return "write_respond";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view text) {
    if (text == "read_invoke") return EventKind::ReadInvoke;
    if (text == "read_respond") return EventKind::ReadRespond;
    if (text == "write_invoke") return EventKind::WriteInvoke;
    if (text == "write_respond") return EventKind::WriteRespond;
    throw std::invalid_argument("unknown event kind: " + std::string(text));
}

std::string format_seconds(Nanos t) {
    const auto ns = t.count();
    const bool negative = ns < 0;
    const auto mag = negative ? -ns : ns;
    std::string frac = std::to_string(mag % 1'000'000'000);
    frac.insert(0, 9 - frac.size(), '0');
    return (negative ? "-" : "") + std::to_string(mag / 1'000'000'000) + "." + frac;
}

Nanos parse_seconds(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty time value");
    bool negative = false;
    if (text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const auto whole_part = text.substr(0, dot);
    std::int64_t whole = 0;
    if (!whole_part.empty()) {
        auto [p, ec] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
        if (ec != std::errc{} || p != whole_part.data() + whole_part.size()) {
            throw std::invalid_argument("bad time value: " + std::string(text));
        }
    }
    std::int64_t frac = 0;
    if (dot != std::string_view::npos) {
        auto digits = text.substr(dot + 1);
        if (digits.size() > 9) throw std::invalid_argument("time has more than 9 fraction digits");
        for (char c : digits) {
            if (c < '0' || c > '9') throw std::invalid_argument("bad time value: " + std::string(text));
            frac = frac * 10 + (c - '0');
        }
        for (auto i = digits.size(); i < 9; ++i) frac *= 10;
    }
    const auto total = whole * 1'000'000'000 + frac;
    return Nanos{negative ? -total : total};
}

Nanos seconds(double s) { return Nanos{static_cast<std::int64_t>(std::llround(s * 1e9))}; }

}  // namespace mwmr
