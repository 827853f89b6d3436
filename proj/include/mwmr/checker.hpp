#pragma once

// Atomicity check for register histories with unique write tags, plus the history CSV format.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mwmr/core.hpp"

namespace mwmr {

enum class Rule : std::uint8_t { C0, C1, C2, C3, C4, C5 };

std::string_view to_string(Rule rule);

/// One operation assembled from its invoke event and, if it completed, its respond event.
struct Operation {
    ProcessId process;
    std::uint32_t op_seq = 0;
    bool is_read = true;
    Nanos invoked{0};
    std::optional<Nanos> responded;
    Tag tag;  // valid when responded
    std::uint8_t rounds = 0;

    bool complete() const { return responded.has_value(); }
};

struct Violation {
    Rule rule = Rule::C0;
    Operation first;
    Operation second;
    std::string detail;
};

struct Verdict {
    std::optional<Violation> violation;

    bool ok() const { return !violation; }
};

struct CheckOptions {
    /// a precedes b only when a.respond + skew < b.invoke.
    Nanos skew{0};
};

/// Groups events into operations. Throws std::invalid_argument on malformed histories:
/// duplicate or orphan events, mismatched kinds, overlapping operations of one process,
/// responses before invocations.
std::vector<Operation> collect_operations(std::span<const HistoryEvent> history);

/// `write_tags` supplies tags for writes (e.g. incomplete ones) beyond those in the history;
/// a disagreement with a recorded response is a C0 violation.
Verdict check_atomicity(std::span<const HistoryEvent> history, const std::map<WriteId, Tag>& write_tags,
                        const CheckOptions& options = {});
Verdict check_atomicity(std::span<const HistoryEvent> history, const CheckOptions& options = {});

std::string describe(const Verdict& verdict);

/// CSV: `time,role,index,op_seq,kind,ts,wid,wseq,rounds`, time in decimal seconds.
/// The header line is written and optional on input.
inline constexpr const char* kHistoryHeader = "time,role,index,op_seq,kind,ts,wid,wseq,rounds";

void write_history_csv(std::ostream& out, std::span<const HistoryEvent> history);
std::vector<HistoryEvent> read_history_csv(std::istream& in);
void save_history(const std::filesystem::path& path, std::span<const HistoryEvent> history);
std::vector<HistoryEvent> load_history(const std::filesystem::path& path);

}  // namespace mwmr
