#include "mwmr/protocols.hpp"

#include <algorithm>
#include <stdexcept>

namespace mwmr {

std::string_view to_string(Algorithm algo) {
    switch (algo) {
        case Algorithm::Simple: return "simple";
        case Algorithm::Sfw: return "sfw";
        case Algorithm::AprxSfw: return "aprxsfw";
        case Algorithm::Cwfr: return "cwfr";
    }
    return "?";
}

Algorithm algorithm_from_string(std::string_view text) {
    if (text == "simple") return Algorithm::Simple;
    if (text == "sfw") return Algorithm::Sfw;
    if (text == "aprxsfw") return Algorithm::AprxSfw;
    if (text == "cwfr") return Algorithm::Cwfr;
    throw std::invalid_argument("unknown algorithm: " + std::string(text));
}

std::string_view to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::ReadQuery: return "ReadQuery";
        case MessageKind::WriteQuery: return "WriteQuery";
        case MessageKind::SfwWrite: return "SfwWrite";
        case MessageKind::Propagate: return "Propagate";
        case MessageKind::ReplyRead: return "ReplyRead";
        case MessageKind::ReplyWrite: return "ReplyWrite";
        case MessageKind::Ack: return "Ack";
    }
    return "?";
}

namespace {

ProtocolMessage reply_to(const ProtocolMessage& msg, MessageKind kind, ProcessId self, const TaggedValue& local) {
    ProtocolMessage out;
    out.kind = kind;
    out.sender = self;
    out.op_seq = msg.op_seq;
    out.tag = local.tag;
    out.value = local.value;
    return out;
}

void adopt(SfwReplica& state, const TaggedValue& tv) {
    if (tv.tag > state.local.tag) state.local = tv;
    state.confirmed = std::max(state.confirmed, tv.tag);
    state.max_ts_seen = std::max(state.max_ts_seen, tv.tag.ts);
}

ProtocolMessage sfw_snapshot(const SfwReplica& state, const ProtocolMessage& msg, MessageKind kind, ProcessId self) {
    auto out = reply_to(msg, kind, self, state.local);
    out.confirmed = state.confirmed;
    out.inprogress.reserve(state.inprogress.size());
    for (const auto& [w, tv] : state.inprogress) out.inprogress.push_back({w, tv});
    return out;
}

}  // namespace

std::optional<ProtocolMessage> simple_server_apply(SimpleReplica& state, const ProtocolMessage& msg, ProcessId self) {
    switch (msg.kind) {
        case MessageKind::ReadQuery:
            return reply_to(msg, MessageKind::ReplyRead, self, state.local);
        case MessageKind::WriteQuery:
            return reply_to(msg, MessageKind::ReplyWrite, self, state.local);
        case MessageKind::Propagate:
            if (msg.tag && *msg.tag > state.local.tag) state.local = {*msg.tag, msg.value};
            return reply_to(msg, MessageKind::Ack, self, state.local);
        default:
            return std::nullopt;
    }
}

std::optional<ProtocolMessage> sfw_server_apply(SfwReplica& state, const ProtocolMessage& msg, ProcessId self) {
    switch (msg.kind) {
        case MessageKind::ReadQuery:
        case MessageKind::WriteQuery:
            return sfw_snapshot(state, msg, MessageKind::ReplyRead, self);
        case MessageKind::SfwWrite: {
            if (msg.sender.role != Role::Writer || !msg.tag) return std::nullopt;
            const auto w = msg.sender.index;
            const auto wseq = msg.tag->wseq;
            // The previous write of this writer has completed with the attached tag.
            for (const auto& prev : msg.inprogress) {
                if (prev.writer == w) adopt(state, prev.entry);
            }
            auto it = state.inprogress.find(w);
            // A retransmission or a late request for an older write keeps the current entry.
            if (it == state.inprogress.end() || it->second.tag.wseq < wseq) {
                const Tag generated{state.max_ts_seen + 1, w, wseq};
                state.max_ts_seen = generated.ts;
                state.inprogress[w] = {generated, msg.value};
            }
            return sfw_snapshot(state, msg, MessageKind::ReplyWrite, self);
        }
        case MessageKind::Propagate:
            if (msg.tag) adopt(state, {*msg.tag, msg.value});
            return sfw_snapshot(state, msg, MessageKind::Ack, self);
        default:
            return std::nullopt;
    }
}

Decision analyze_quorum_views(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, Tag>& tags,
                              EvalStats* stats) {
    const auto quorum = qs.quorum(q);
    Tag max_tag = kInitialTag;
    for (auto s : quorum.members()) {
        auto it = tags.find(s);
        if (it == tags.end()) {
            throw std::invalid_argument("analyze_quorum_views: no tag from quorum member " + std::to_string(s));
        }
        max_tag = std::max(max_tag, it->second);
    }
    auto remaining = quorum;
    while (true) {
        Tag cur_max = kInitialTag;
        for (auto s : remaining.members()) cur_max = std::max(cur_max, tags.at(s));
        if (stats) stats->steps += remaining.size();
        ServerSet at_max;
        for (auto s : remaining.members()) {
            if (tags.at(s) == cur_max) at_max.insert(s);
        }
        if (at_max == remaining) return fast(cur_max);
        // Servers holding at least cur_max; removed servers held strictly larger tags.
        ServerSet witnessed;
        for (auto s : quorum.members()) {
            if (tags.at(s) >= cur_max) witnessed.insert(s);
        }
        const auto quorums = qs.quorums();
        for (std::size_t i = 0; i < quorums.size(); ++i) {
            if (i == q) continue;
            if (stats) ++stats->steps;
            if ((quorum & quorums[i]).subset_of(witnessed)) return slow(max_tag);
        }
        remaining = remaining - at_max;
    }
}

ClientSession::ClientSession(Algorithm algorithm, ProcessId self, std::shared_ptr<const QuorumSystem> qs)
    : algorithm_(algorithm), self_(self), qs_(std::move(qs)) {
    if (!qs_) throw std::invalid_argument("ClientSession needs a quorum system");
    if (self_.role == Role::Server) throw std::invalid_argument("servers do not run client sessions");
}

StepOutput ClientSession::step(const ClientEvent& event) {
    if (std::holds_alternative<InvokeRead>(event)) return start(true, {});
    if (const auto* w = std::get_if<InvokeWrite>(&event)) return start(false, w->value);
    return on_reply(std::get<Reply>(event));
}

ProtocolMessage ClientSession::request(MessageKind kind) const {
    ProtocolMessage msg;
    msg.kind = kind;
    msg.sender = self_;
    msg.op_seq = op_seq_;
    return msg;
}

StepOutput ClientSession::start(bool is_read, std::string value) {
    if (active()) throw std::logic_error("operation invoked while another is active");
    if (!is_read && self_.role != Role::Writer) throw std::logic_error("only writers invoke writes");
    ++op_seq_;
    if (!is_read) ++wseq_;
    is_read_ = is_read;
    write_value_ = std::move(value);
    replies_.clear();
    replied_ = {};
    phase_ = Phase::Round1;

    StepOutput out;
    if (is_read) {
        out.broadcast = request(MessageKind::ReadQuery);
    } else if (uses_sso(algorithm_)) {
        auto msg = request(MessageKind::SfwWrite);
        msg.tag = Tag{0, self_.index, wseq_};
        msg.value = write_value_;
        if (previous_write_) msg.inprogress.push_back({self_.index, *previous_write_});
        out.broadcast = std::move(msg);
    } else {
        out.broadcast = request(MessageKind::WriteQuery);
    }
    return out;
}

StepOutput ClientSession::on_reply(const Reply& reply) {
    const auto& msg = reply.message;
    if (!active() || msg.op_seq != op_seq_ || reply.server >= qs_->server_count()) return {};
    const auto round1_kind = is_read_ ? MessageKind::ReplyRead : MessageKind::ReplyWrite;
    if (msg.kind != (phase_ == Phase::Round1 ? round1_kind : MessageKind::Ack)) return {};
    replies_[reply.server] = msg;
    replied_.insert(reply.server);
    const auto q = reply_complete(*qs_, replied_);
    if (!q) return {};
    if (phase_ == Phase::Round2) return complete(decided_, 2, {});
    return finish_round1(*q);
}

TaggedValue ClientSession::value_for(QuorumIndex q, const Tag& tag) const {
    if (tag.is_initial()) return {};
    for (auto s : qs_->quorum(q).members()) {
        const auto& r = replies_.at(s);
        if (r.tag && *r.tag == tag) return {tag, r.value};
        for (const auto& e : r.inprogress) {
            if (e.entry.tag == tag) return e.entry;
        }
    }
    throw ProtocolError("no reply in the quorum carries the value for tag " + to_string(tag));
}

StepOutput ClientSession::finish_round1(QuorumIndex q) {
    EvalStats stats;
    const auto members = qs_->quorum(q).members();
    const auto engine = algorithm_ == Algorithm::Sfw ? Engine::Exact : Engine::Greedy;

    if (uses_sso(algorithm_)) {
        if (!is_read_) {
            std::map<std::uint32_t, std::vector<Tag>> inprogress;
            for (auto s : members) {
                auto& tags = inprogress[s];
                for (const auto& e : replies_.at(s).inprogress) tags.push_back(e.entry.tag);
            }
            const auto d = evaluate_pw(*qs_, q, inprogress, WriteId{self_.index, wseq_}, qs_->degree(), engine, &stats);
            TaggedValue result{d.tag, write_value_};
            if (d.speed == Speed::Fast) return complete(std::move(result), 1, stats);
            return begin_round2(std::move(result), stats);
        }
        std::map<std::uint32_t, SfwReplyTags> tags;
        for (auto s : members) {
            const auto& r = replies_.at(s);
            auto& t = tags[s];
            t.confirmed = r.confirmed.value_or(kInitialTag);
            for (const auto& e : r.inprogress) t.inprogress.push_back(e.entry.tag);
        }
        const auto d = evaluate_pr(*qs_, q, tags, qs_->degree(), engine, &stats);
        auto result = value_for(q, d.tag);
        if (d.speed == Speed::Fast) return complete(std::move(result), 1, stats);
        return begin_round2(std::move(result), stats);
    }

    Tag max_tag = kInitialTag;
    std::map<std::uint32_t, Tag> tags;
    for (auto s : members) {
        const auto t = replies_.at(s).tag.value_or(kInitialTag);
        tags[s] = t;
        max_tag = std::max(max_tag, t);
    }
    stats.steps += members.size();
    if (!is_read_) {
        return begin_round2({next_tag(max_tag, self_, wseq_), write_value_}, stats);
    }
    if (algorithm_ == Algorithm::Cwfr) {
        const auto d = analyze_quorum_views(*qs_, q, tags, &stats);
        auto result = value_for(q, d.tag);
        if (d.speed == Speed::Fast) return complete(std::move(result), 1, stats);
        return begin_round2(std::move(result), stats);
    }
    return begin_round2(value_for(q, max_tag), stats);
}

StepOutput ClientSession::begin_round2(TaggedValue decided, EvalStats stats) {
    decided_ = std::move(decided);
    replies_.clear();
    replied_ = {};
    phase_ = Phase::Round2;
    StepOutput out;
    auto msg = request(MessageKind::Propagate);
    msg.tag = decided_.tag;
    msg.value = decided_.value;
    out.broadcast = std::move(msg);
    out.stats = stats;
    return out;
}

StepOutput ClientSession::complete(TaggedValue result, std::uint8_t rounds, EvalStats stats) {
    phase_ = Phase::Idle;
    if (!is_read_) previous_write_ = result;
    StepOutput out;
    out.completion = Completion{op_seq_, is_read_, std::move(result), rounds};
    out.stats = stats;
    replies_.clear();
    replied_ = {};
    return out;
}

}  // namespace mwmr
