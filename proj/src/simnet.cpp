#include "mwmr/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <variant>

namespace mwmr {

std::string_view to_string(ComputeCharge charge) {
    switch (charge) {
        case ComputeCharge::None: return "none";
        case ComputeCharge::Counted: return "counted";
        case ComputeCharge::WallClock: return "wallclock";
    }
    return "?";
}

ComputeCharge compute_charge_from_string(std::string_view text) {
    if (text == "none") return ComputeCharge::None;
    if (text == "counted") return ComputeCharge::Counted;
    if (text == "wallclock") return ComputeCharge::WallClock;
    throw std::invalid_argument("unknown compute charge: " + std::string(text));
}

void ScenarioConfig::validate() const {
    for (double d : {link_latency, proc_delay_max, r_int, w_int, sim_time_budget, ns_per_step}) {
        if (!(d >= 0) || !std::isfinite(d)) throw std::invalid_argument("durations must be finite and >= 0");
    }
    if (!(crash_chance >= 0 && crash_chance <= 1)) throw std::invalid_argument("crash_chance must be in [0,1]");
    if (readers + writers == 0) throw std::invalid_argument("scenario needs at least one client");
    if (writers > 0xFFFF || readers > 0xFFFF) throw std::invalid_argument("too many clients");
}

double ScenarioConfig::default_budget() const {
    const double per_op = std::max(r_int, w_int) + 8 * (link_latency + proc_delay_max);
    return ops_per_client * per_op * 1.1 + 10.0;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, Stream stream, ProcessId who) {
    std::uint64_t state = seed;
    splitmix64(state);
    state ^= static_cast<std::uint64_t>(stream) << 48 ^ static_cast<std::uint64_t>(who.role) << 40 ^ who.index;
    return std::mt19937_64(splitmix64(state));
}

Nanos uniform_nanos(std::mt19937_64& rng, Nanos max) {
    if (max.count() <= 0) return Nanos{0};
    const auto span = static_cast<unsigned __int128>(max.count()) + 1;
    return Nanos{static_cast<std::int64_t>((span * rng()) >> 64)};
}

Nanos sample_message_delay(std::mt19937_64& rng, const ScenarioConfig& cfg) {
    return seconds(cfg.link_latency) + uniform_nanos(rng, seconds(cfg.proc_delay_max));
}

std::vector<Nanos> crash_timer_expiries(Nanos budget) {
    std::vector<Nanos> out;
    // Exact halving in nanoseconds; 3 * 2^k * gap stays within range for any sane budget.
    Nanos gap = budget / 3;
    Nanos t{0};
    while (gap >= std::chrono::seconds(1)) {
        t += gap;
        out.push_back(t);
        gap /= 2;
    }
    return out;
}

std::vector<CrashEvent> schedule_crashes(const ScenarioConfig& cfg, std::mt19937_64& rng, ServerSet correct_quorum) {
    std::vector<CrashEvent> plan;
    if (!cfg.crashes_enabled || cfg.crash_chance <= 0) return plan;
    const auto expiries = crash_timer_expiries(seconds(cfg.budget()));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::uint32_t s = 0; s < cfg.servers; ++s) {
        if (correct_quorum.contains(s)) continue;
        for (auto t : expiries) {
            if (coin(rng) < cfg.crash_chance) {
                plan.push_back({s, t});
                break;
            }
        }
    }
    std::stable_sort(plan.begin(), plan.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    return plan;
}

namespace {

struct Deliver {
    ProcessId to;
    std::uint32_t from_server = 0;  // for replies to clients
    ProtocolMessage message;
};
struct Invoke {
    ProcessId client;
};
struct Crash {
    std::uint32_t server = 0;
};

struct Event {
    Nanos time;
    std::uint64_t seq = 0;
    std::variant<Deliver, Invoke, Crash> what;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
};

struct Client {
    ClientSession session;
    std::mt19937_64 schedule;
    std::mt19937_64 network;
    Nanos interval;
    std::uint32_t issued = 0;
    std::size_t current_op = 0;
};

struct ServerNode {
    SimpleReplica simple;
    SfwReplica sfw;
    std::mt19937_64 network;
    bool crashed = false;
};

class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, std::shared_ptr<const QuorumSystem> qs) : cfg_(cfg), qs_(std::move(qs)) {
        budget_ = seconds(cfg_.budget());
        auto crash_rng = make_stream(cfg_.seed, Stream::Crash, server(0));
        result_.correct_quorum = std::uniform_int_distribution<std::size_t>(0, qs_->size() - 1)(crash_rng);
        for (const auto& c : schedule_crashes(cfg_, crash_rng, qs_->quorum(result_.correct_quorum))) {
            push(c.time, Crash{c.server});
        }
        for (std::uint32_t s = 0; s < cfg_.servers; ++s) {
            servers_.push_back(ServerNode{{}, {}, make_stream(cfg_.seed, Stream::Network, server(s)), false});
        }
        auto add_client = [&](ProcessId p, double interval) {
            clients_.emplace(p, Client{ClientSession(cfg_.algorithm, p, qs_), make_stream(cfg_.seed, Stream::Schedule, p),
                                       make_stream(cfg_.seed, Stream::Network, p), seconds(interval)});
        };
        for (std::uint32_t i = 0; i < cfg_.writers; ++i) add_client(writer(i), cfg_.w_int);
        for (std::uint32_t i = 0; i < cfg_.readers; ++i) add_client(reader(i), cfg_.r_int);
        for (auto& [p, c] : clients_) schedule_next(p, c, Nanos{0});
    }

    RunResult run() {
        while (!queue_.empty()) {
            std::pop_heap(queue_.begin(), queue_.end(), Later{});
            Event ev = std::move(queue_.back());
            queue_.pop_back();
            if (ev.time > budget_) {
                queue_.clear();
                break;
            }
            now_ = ev.time;
            std::visit([&](auto& w) { handle(w); }, ev.what);
        }
        result_.end_time = now_;
        for (const auto& [p, c] : clients_) {
            if (c.issued < cfg_.ops_per_client || c.session.active()) {
                result_.incomplete = true;
                result_.unfinished.push_back(p);
            }
        }
        return std::move(result_);
    }

private:
    void push(Nanos t, std::variant<Deliver, Invoke, Crash> what) {
        queue_.push_back(Event{t, next_seq_++, std::move(what)});
        std::push_heap(queue_.begin(), queue_.end(), Later{});
    }

    void schedule_next(ProcessId p, Client& c, Nanos from) {
        if (c.issued >= cfg_.ops_per_client) return;
        push(from + uniform_nanos(c.schedule, c.interval), Invoke{p});
    }

    void broadcast(Client& c, Nanos at, const ProtocolMessage& msg) {
        for (std::uint32_t s = 0; s < cfg_.servers; ++s) {
            push(at + sample_message_delay(c.network, cfg_), Deliver{server(s), 0, msg});
            ++result_.messages;
        }
    }

    void run_step(ProcessId p, Client& c, const ClientEvent& event) {
        const auto started = std::chrono::steady_clock::now();
        auto out = c.session.step(event);
        Nanos cost{0};
        if (cfg_.compute == ComputeCharge::Counted) {
            cost = Nanos{static_cast<std::int64_t>(std::llround(out.stats.steps * cfg_.ns_per_step))};
        } else if (cfg_.compute == ComputeCharge::WallClock) {
            cost = std::chrono::duration_cast<Nanos>(std::chrono::steady_clock::now() - started);
        }
        result_.compute_steps += out.stats.steps;
        const auto done = now_ + cost;
        if (out.broadcast) broadcast(c, done, *out.broadcast);
        if (out.completion) complete(p, c, done, *out.completion);
    }

    void complete(ProcessId p, Client& c, Nanos at, const Completion& done) {
        auto& rec = result_.ops[c.current_op];
        rec.responded = at;
        rec.complete = true;
        rec.rounds = done.rounds;
        rec.tag = done.result.tag;
        const auto kind = done.is_read ? EventKind::ReadRespond : EventKind::WriteRespond;
        result_.history.push_back(HistoryEvent{p, done.op_seq, kind, at, done.result.tag, done.rounds});
        if (done.is_read) {
            ++result_.completed_reads;
            const auto& tag = done.result.tag;
            const auto it = written_.find(tag.write_id());
            const bool matches = tag.is_initial() ? done.result.value.empty()
                                                  : it != written_.end() && it->second == done.result.value;
            if (!matches) ++result_.value_mismatches;
        } else {
            ++result_.completed_writes;
        }
        schedule_next(p, c, at);
    }

    void handle(Invoke& inv) {
        auto& c = clients_.at(inv.client);
        ++c.issued;
        OpRecord rec;
        rec.process = inv.client;
        rec.is_read = inv.client.role == Role::Reader;
        rec.invoked = now_;
        rec.op_seq = c.session.op_seq() + 1;
        c.current_op = result_.ops.size();
        result_.ops.push_back(rec);
        if (rec.is_read) {
            result_.history.push_back(HistoryEvent{inv.client, rec.op_seq, EventKind::ReadInvoke, now_, {}, 0});
            run_step(inv.client, c, InvokeRead{});
        } else {
            auto value = "w" + std::to_string(inv.client.index) + "." + std::to_string(rec.op_seq);
            written_[WriteId{inv.client.index, rec.op_seq}] = value;
            result_.history.push_back(HistoryEvent{inv.client, rec.op_seq, EventKind::WriteInvoke, now_, {}, 0});
            run_step(inv.client, c, InvokeWrite{std::move(value)});
        }
    }

    void handle(Deliver& d) {
        if (d.to.role == Role::Server) {
            auto& node = servers_[d.to.index];
            if (node.crashed) return;
            const auto reply = uses_sso(cfg_.algorithm) ? sfw_server_apply(node.sfw, d.message, d.to)
                                                        : simple_server_apply(node.simple, d.message, d.to);
            if (!reply) return;
            push(now_ + sample_message_delay(node.network, cfg_), Deliver{d.message.sender, d.to.index, *reply});
            ++result_.messages;
            return;
        }
        auto& c = clients_.at(d.to);
        run_step(d.to, c, Reply{d.from_server, std::move(d.message)});
    }

    void handle(Crash& crash) {
        servers_[crash.server].crashed = true;
        result_.crashes.push_back({crash.server, now_});
    }

    const ScenarioConfig& cfg_;
    std::shared_ptr<const QuorumSystem> qs_;
    Nanos budget_{0};
    Nanos now_{0};
    std::uint64_t next_seq_ = 0;
    std::vector<Event> queue_;
    std::vector<ServerNode> servers_;
    std::map<ProcessId, Client> clients_;
    std::map<WriteId, std::string> written_;
    RunResult result_;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    return run_scenario(cfg, std::make_shared<const QuorumSystem>(build_majority_system(cfg.servers, cfg.f)));
}

RunResult run_scenario(const ScenarioConfig& cfg, std::shared_ptr<const QuorumSystem> qs) {
    cfg.validate();
    if (!qs || qs->server_count() != cfg.servers || qs->f() != cfg.f) {
        throw std::invalid_argument("quorum system does not match the scenario");
    }
    return Simulation(cfg, std::move(qs)).run();
}

}  // namespace mwmr
