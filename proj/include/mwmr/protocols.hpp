#pragma once

// The four register algorithms as transport-independent state machines: one replica
// type per server flavour and a client session that turns invocations and replies into
// broadcasts and completions.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mwmr/core.hpp"
#include "mwmr/predicates.hpp"
#include "mwmr/quorums.hpp"

namespace mwmr {

enum class Algorithm : std::uint8_t { Simple, Sfw, AprxSfw, Cwfr };

std::string_view to_string(Algorithm algo);
Algorithm algorithm_from_string(std::string_view text);

/// SFW and APRX-SFW run the server-side-ordering replica; SIMPLE and CWFR the plain one.
constexpr bool uses_sso(Algorithm a) { return a == Algorithm::Sfw || a == Algorithm::AprxSfw; }

enum class MessageKind : std::uint8_t {
    ReadQuery = 1,
    WriteQuery = 2,
    SfwWrite = 3,
    Propagate = 4,
    ReplyRead = 5,
    ReplyWrite = 6,
    Ack = 7,
};

std::string_view to_string(MessageKind kind);

struct InprogressEntry {
    std::uint32_t writer = 0;
    TaggedValue entry;

    friend bool operator==(const InprogressEntry&, const InprogressEntry&) = default;
};

/// Field use by kind:
///   SfwWrite   value = new value, tag = (0, writer, write counter), inprogress = {previous
///              write's decided tag and value} when the writer has one.
///   Propagate  tag + value.
///   Reply*/Ack tag + value = server's local copy; SSO servers add inprogress + confirmed.
struct ProtocolMessage {
    MessageKind kind = MessageKind::ReadQuery;
    ProcessId sender;
    std::uint32_t op_seq = 0;
    std::optional<Tag> tag;
    std::string value;
    std::vector<InprogressEntry> inprogress;
    std::optional<Tag> confirmed;

    friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

struct SimpleReplica {
    TaggedValue local;
};

struct SfwReplica {
    TaggedValue local;
    /// Latest tag generated per writer, with the value it was generated for.
    std::map<std::uint32_t, TaggedValue> inprogress;
    Tag confirmed;
    std::uint64_t max_ts_seen = 0;
};

/// Adopts a strictly newer propagated tag; replies with the local copy. Returns nothing for
/// message kinds a server does not handle.
std::optional<ProtocolMessage> simple_server_apply(SimpleReplica& state, const ProtocolMessage& msg, ProcessId self);

/// Server-side ordering: a write request gets a fresh tag above every timestamp the server
/// has witnessed, recorded as the writer's single inprogress entry.
std::optional<ProtocolMessage> sfw_server_apply(SfwReplica& state, const ProtocolMessage& msg, ProcessId self);

/// Quorum-view analysis of the tags reported by the members of Q.
Decision analyze_quorum_views(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, Tag>& tags,
                              EvalStats* stats = nullptr);

enum class Phase : std::uint8_t { Idle, Round1, Round2 };

struct InvokeRead {};
struct InvokeWrite {
    std::string value;
};
struct Reply {
    std::uint32_t server = 0;
    ProtocolMessage message;
};
using ClientEvent = std::variant<InvokeRead, InvokeWrite, Reply>;

struct Completion {
    std::uint32_t op_seq = 0;
    bool is_read = true;
    TaggedValue result;
    std::uint8_t rounds = 0;
};

struct StepOutput {
    /// Sent to every server.
    std::optional<ProtocolMessage> broadcast;
    std::optional<Completion> completion;
    EvalStats stats;
};

/// Per-process client state machine. One operation at a time; replies for other
/// operations, other rounds or unknown servers are ignored.
class ClientSession {
public:
    ClientSession(Algorithm algorithm, ProcessId self, std::shared_ptr<const QuorumSystem> qs);

    /// Throws std::logic_error when invoked while an operation is active, or when a
    /// non-writer invokes a write.
    StepOutput step(const ClientEvent& event);

    Algorithm algorithm() const { return algorithm_; }
    ProcessId self() const { return self_; }
    Phase phase() const { return phase_; }
    std::uint32_t op_seq() const { return op_seq_; }
    bool active() const { return phase_ != Phase::Idle; }

private:
    StepOutput start(bool is_read, std::string value);
    StepOutput on_reply(const Reply& reply);
    StepOutput finish_round1(QuorumIndex q);
    StepOutput begin_round2(TaggedValue decided, EvalStats stats);
    StepOutput complete(TaggedValue result, std::uint8_t rounds, EvalStats stats);
    ProtocolMessage request(MessageKind kind) const;
    TaggedValue value_for(QuorumIndex q, const Tag& tag) const;

    Algorithm algorithm_;
    ProcessId self_;
    std::shared_ptr<const QuorumSystem> qs_;
    Phase phase_ = Phase::Idle;
    std::uint32_t op_seq_ = 0;
    std::uint32_t wseq_ = 0;
    bool is_read_ = true;
    std::string write_value_;
    TaggedValue decided_;
    std::optional<TaggedValue> previous_write_;
    std::map<std::uint32_t, ProtocolMessage> replies_;
    ServerSet replied_;
};

}  // namespace mwmr
