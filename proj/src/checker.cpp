#include "mwmr/checker.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace mwmr {

std::string_view to_string(Rule rule) {
    static constexpr const char* names[] = {"C0", "C1", "C2", "C3", "C4", "C5"};
    return names[static_cast<int>(rule)];
}

namespace {

std::string label(const ProcessId& p, std::uint32_t op_seq) {
    return std::string(to_string(p.role)) + " " + std::to_string(p.index) + " op " + std::to_string(op_seq);
}

std::string label(const Operation& op) { return label(op.process, op.op_seq); }

[[noreturn]] void malformed(const std::string& what) { throw std::invalid_argument("malformed history: " + what); }

Verdict violated(Rule rule, const Operation& a, const Operation& b, std::string detail) {
    return Verdict{Violation{rule, a, b, std::move(detail)}};
}

bool canonical_less(const Operation& a, const Operation& b) {
    return std::tie(a.invoked, a.process, a.op_seq) < std::tie(b.invoked, b.process, b.op_seq);
}

}  // namespace

std::vector<Operation> collect_operations(std::span<const HistoryEvent> history) {
    struct Pair {
        const HistoryEvent* invoke = nullptr;
        const HistoryEvent* respond = nullptr;
    };
    std::map<std::pair<ProcessId, std::uint32_t>, Pair> pairs;
    for (const auto& e : history) {
        if (e.process.role == Role::Server) malformed("event recorded for a server");
        auto& p = pairs[{e.process, e.op_seq}];
        auto& slot = is_invoke(e.kind) ? p.invoke : p.respond;
        if (slot) malformed("duplicate " + std::string(to_string(e.kind)) + " for " + label(e.process, e.op_seq));
        slot = &e;
    }

    std::vector<Operation> ops;
    ops.reserve(pairs.size());
    const Operation* prev = nullptr;
    for (const auto& [key, p] : pairs) {
        const auto name = label(key.first, key.second);
        if (!p.invoke) malformed("response without invocation for " + name);
        Operation op;
        op.process = key.first;
        op.op_seq = key.second;
        op.is_read = is_read(p.invoke->kind);
        op.invoked = p.invoke->time;
        if (p.respond) {
            if (is_read(p.respond->kind) != op.is_read) malformed("invoke/respond kinds differ for " + name);
            if (p.respond->time < op.invoked) malformed("response before invocation for " + name);
            if (p.respond->rounds != 1 && p.respond->rounds != 2) malformed("rounds must be 1 or 2 for " + name);
            op.responded = p.respond->time;
            op.tag = p.respond->tag;
            op.rounds = p.respond->rounds;
        }
        // Map order puts one process's operations next to each other, by op_seq.
        if (prev && prev->process == op.process) {
            if (!prev->complete() || *prev->responded > op.invoked) {
                malformed(label(*prev) + " overlaps " + name);
            }
        }
        ops.push_back(op);
        prev = &ops.back();
    }
    std::sort(ops.begin(), ops.end(), canonical_less);
    return ops;
}

Verdict check_atomicity(std::span<const HistoryEvent> history, const CheckOptions& options) {
    return check_atomicity(history, {}, options);
}

Verdict check_atomicity(std::span<const HistoryEvent> history, const std::map<WriteId, Tag>& write_tags,
                        const CheckOptions& options) {
    const auto ops = collect_operations(history);
    const auto skew = options.skew;

    // C0: a write's own tag names it, and every observer of the write sees one tag.
    std::map<WriteId, const Operation*> writes;
    std::map<WriteId, std::pair<Tag, const Operation*>> seen;
    for (const auto& op : ops) {
        if (op.is_read) continue;
        const WriteId id{op.process.index, op.op_seq};
        writes[id] = &op;
        if (!op.complete()) continue;
        if (op.tag.write_id() != id) {
            return violated(Rule::C0, op, op, "write tag " + to_string(op.tag) + " does not name the write");
        }
        seen[id] = {op.tag, &op};
    }
    for (const auto& [id, tag] : write_tags) {
        auto it = seen.find(id);
        if (it != seen.end() && it->second.first != tag) {
            const auto& op = *it->second.second;
            return violated(Rule::C0, op, op, "recorded tag " + to_string(op.tag) + " differs from " + to_string(tag));
        }
    }
    for (const auto& op : ops) {
        if (!op.is_read || !op.complete() || op.tag.is_initial()) continue;
        const auto id = op.tag.write_id();
        auto known = write_tags.find(id);
        if (known != write_tags.end() && known->second != op.tag) {
            return violated(Rule::C0, op, op,
                            "read returned " + to_string(op.tag) + " but the write holds " + to_string(known->second));
        }
        auto [it, inserted] = seen.try_emplace(id, op.tag, &op);
        if (!inserted && it->second.first != op.tag) {
            return violated(Rule::C0, *it->second.second, op,
                            "tags " + to_string(it->second.first) + " and " + to_string(op.tag) + " for one write");
        }
    }

    // C1: no read returns a value from the future or from nowhere.
    for (const auto& op : ops) {
        if (!op.is_read || !op.complete() || op.tag.is_initial()) continue;
        auto it = writes.find(op.tag.write_id());
        if (it == writes.end()) {
            return violated(Rule::C1, op, op, "read returned " + to_string(op.tag) + " of a write never invoked");
        }
        if (it->second->invoked > *op.responded + skew) {
            return violated(Rule::C1, *it->second, op, "read returned a tag of a write invoked after it responded");
        }
    }

    // C2-C5 against the largest write and read tags among operations preceding each op.
    std::vector<const Operation*> by_response;
    for (const auto& op : ops) {
        if (op.complete()) by_response.push_back(&op);
    }
    std::sort(by_response.begin(), by_response.end(), [](const Operation* a, const Operation* b) {
        return std::tie(*a->responded, a->process, a->op_seq) < std::tie(*b->responded, b->process, b->op_seq);
    });
    const Operation* max_write = nullptr;
    const Operation* max_read = nullptr;
    std::size_t next = 0;
    for (const auto& b : ops) {
        if (!b.complete()) continue;
        while (next < by_response.size() && *by_response[next]->responded + skew < b.invoked) {
            const auto* a = by_response[next++];
            auto& slot = a->is_read ? max_read : max_write;
            if (!slot || a->tag > slot->tag) slot = a;
        }
        auto edge = [&](Rule rule, const Operation* a, const char* relation) {
            return violated(rule, *a, b,
                            label(*a) + " " + to_string(a->tag) + " precedes " + label(b) + " " + to_string(b.tag) +
                                ", expected " + relation);
        };
        if (b.is_read) {
            if (max_write && b.tag < max_write->tag) return edge(Rule::C3, max_write, "read tag >= write tag");
            if (max_read && b.tag < max_read->tag) return edge(Rule::C4, max_read, "non-decreasing read tags");
        } else {
            if (max_write && !(max_write->tag < b.tag)) return edge(Rule::C2, max_write, "increasing write tags");
            if (max_read && !(max_read->tag < b.tag)) return edge(Rule::C5, max_read, "write tag > read tag");
        }
    }
    return {};
}

std::string describe(const Verdict& verdict) {
    if (verdict.ok()) return "ok";
    const auto& v = *verdict.violation;
    return std::string(to_string(v.rule)) + ": " + v.detail;
}

void write_history_csv(std::ostream& out, std::span<const HistoryEvent> history) {
    out << kHistoryHeader << '\n';
    for (const auto& e : history) {
        out << format_seconds(e.time) << ',' << to_string(e.process.role) << ',' << e.process.index << ','
            << e.op_seq << ',' << to_string(e.kind) << ',' << e.tag.ts << ',' << e.tag.wid << ',' << e.tag.wseq
            << ',' << static_cast<int>(e.rounds) << '\n';
    }
}

namespace {

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
    T value{};
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || p != field.data() + field.size()) {
        throw std::invalid_argument("history line " + std::to_string(line) + ": bad number '" + std::string(field) +
                                    "'");
    }
    return value;
}

}  // namespace

std::vector<HistoryEvent> read_history_csv(std::istream& in) {
    std::vector<HistoryEvent> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("time,", 0) == 0) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != 9) {
            throw std::invalid_argument("history line " + std::to_string(lineno) + ": expected 9 fields");
        }
        HistoryEvent e;
        try {
            e.time = parse_seconds(fields[0]);
            e.process = {role_from_string(fields[1]), parse_number<std::uint32_t>(fields[2], lineno)};
            e.kind = event_kind_from_string(fields[4]);
        } catch (const std::invalid_argument& err) {
            throw std::invalid_argument("history line " + std::to_string(lineno) + ": " + err.what());
        }
        e.op_seq = parse_number<std::uint32_t>(fields[3], lineno);
        e.tag = {parse_number<std::uint64_t>(fields[5], lineno), parse_number<std::uint32_t>(fields[6], lineno),
                 parse_number<std::uint32_t>(fields[7], lineno)};
        e.rounds = parse_number<std::uint8_t>(fields[8], lineno);
        events.push_back(e);
    }
    return events;
}

void save_history(const std::filesystem::path& path, std::span<const HistoryEvent> history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_history_csv(out, history);
}

std::vector<HistoryEvent> load_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_history_csv(in);
}

}  // namespace mwmr
