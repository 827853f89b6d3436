#pragma once

// Deterministic discrete-event simulation of clients and servers over delay-only links,
// with crash-prone servers outside one protected quorum.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mwmr/core.hpp"
#include "mwmr/protocols.hpp"
#include "mwmr/quorums.hpp"

namespace mwmr {

/// How local computation in a client step advances simulated time.
/// Counted charges `ns_per_step` per evaluation step and keeps runs reproducible;
/// WallClock charges the measured host time.
enum class ComputeCharge : std::uint8_t { None, Counted, WallClock };

std::string_view to_string(ComputeCharge charge);
ComputeCharge compute_charge_from_string(std::string_view text);

struct ScenarioConfig {
    Algorithm algorithm = Algorithm::Simple;
    std::uint32_t readers = 2;
    std::uint32_t writers = 2;
    std::uint32_t servers = 5;
    std::uint32_t f = 1;
    double link_latency = 0.010;
    double proc_delay_max = 0.300;
    double r_int = 4.0;
    double w_int = 4.0;
    std::uint32_t ops_per_client = 25;
    bool crashes_enabled = false;
    double crash_chance = 0.05;
    /// Seconds; 0 selects default_budget().
    double sim_time_budget = 0.0;
    std::uint64_t seed = 1;
    ComputeCharge compute = ComputeCharge::Counted;
    double ns_per_step = 50.0;

    /// Throws std::invalid_argument for negative durations or a probability outside [0,1].
    void validate() const;
    /// ops * (max(r_int, w_int) + 8 * (link + proc_max)) plus 10% and 10 s of slack: enough for
    /// every operation's two round trips after its scheduling gap.
    double default_budget() const;
    double budget() const { return sim_time_budget > 0 ? sim_time_budget : default_budget(); }
};

struct OpRecord {
    ProcessId process;
    std::uint32_t op_seq = 0;
    bool is_read = true;
    Nanos invoked{0};
    Nanos responded{0};
    bool complete = false;
    std::uint8_t rounds = 0;
    Tag tag;

    Nanos latency() const { return responded - invoked; }
};

struct CrashEvent {
    std::uint32_t server = 0;
    Nanos time{0};

    friend bool operator==(const CrashEvent&, const CrashEvent&) = default;
};

struct RunResult {
    std::vector<HistoryEvent> history;
    std::vector<OpRecord> ops;  // in invocation order
    std::uint32_t completed_reads = 0;
    std::uint32_t completed_writes = 0;
    QuorumIndex correct_quorum = 0;
    std::vector<CrashEvent> crashes;  // applied crashes, by time
    /// Some client had not finished all its operations when the budget ran out.
    bool incomplete = false;
    std::vector<ProcessId> unfinished;
    /// Reads whose returned value differs from the value written under the returned tag.
    std::uint32_t value_mismatches = 0;
    std::uint64_t compute_steps = 0;
    std::uint64_t messages = 0;
    Nanos end_time{0};
};

/// Per-purpose random streams derived from the master seed.
enum class Stream : std::uint32_t { Crash = 1, Schedule = 2, Network = 3 };
std::mt19937_64 make_stream(std::uint64_t seed, Stream stream, ProcessId who);

/// Uniform on [0, max].
Nanos uniform_nanos(std::mt19937_64& rng, Nanos max);

/// link_latency + U(0, proc_delay_max).
Nanos sample_message_delay(std::mt19937_64& rng, const ScenarioConfig& cfg);

/// Timer expiries for one server: budget/3, then halving gaps while the gap is at least 1 s.
std::vector<Nanos> crash_timer_expiries(Nanos budget);

/// Crash times for servers outside `correct_quorum`, one draw per expiry until the first hit.
std::vector<CrashEvent> schedule_crashes(const ScenarioConfig& cfg, std::mt19937_64& rng, ServerSet correct_quorum);

RunResult run_scenario(const ScenarioConfig& cfg);
/// Same, with a prebuilt quorum system matching cfg.servers and cfg.f.
RunResult run_scenario(const ScenarioConfig& cfg, std::shared_ptr<const QuorumSystem> qs);

}  // namespace mwmr
