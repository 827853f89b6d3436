#include <doctest.h>

#include <set>

#include "mwmr/checker.hpp"
#include "mwmr/simnet.hpp"

using namespace mwmr;
using namespace std::chrono_literals;

namespace {

const Algorithm kAll[] = {Algorithm::Simple, Algorithm::Sfw, Algorithm::AprxSfw, Algorithm::Cwfr};

ScenarioConfig small(Algorithm algo, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.algorithm = algo;
    cfg.seed = seed;
    cfg.ops_per_client = 10;
    cfg.r_int = 0.5;
    cfg.w_int = 0.5;
    return cfg;
}

}  // namespace

TEST_CASE("message delays") {
    ScenarioConfig cfg;
    auto rng = make_stream(3, Stream::Network, server(0));
    for (int i = 0; i < 10000; ++i) {
        const auto d = sample_message_delay(rng, cfg);
        CHECK(d >= 10ms);
        CHECK(d <= 310ms);
    }
    cfg.proc_delay_max = 0;
    for (int i = 0; i < 10; ++i) CHECK(sample_message_delay(rng, cfg) == 10ms);

    auto a = make_stream(3, Stream::Network, server(0));
    auto b = make_stream(3, Stream::Network, server(0));
    ScenarioConfig defaults;
    for (int i = 0; i < 100; ++i) CHECK(sample_message_delay(a, defaults) == sample_message_delay(b, defaults));
}

TEST_CASE("uniform_nanos covers its closed range") {
    auto rng = make_stream(1, Stream::Schedule, reader(0));
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) seen.insert(uniform_nanos(rng, Nanos{3}).count());
    CHECK(seen == std::set<std::int64_t>{0, 1, 2, 3});
    CHECK(uniform_nanos(rng, Nanos{0}) == Nanos{0});
}

TEST_CASE("random streams are separated by purpose and process") {
    std::set<std::uint64_t> firsts;
    for (auto stream : {Stream::Crash, Stream::Schedule, Stream::Network}) {
        for (auto p : {reader(0), reader(1), writer(0), writer(1), server(0)}) firsts.insert(make_stream(9, stream, p)());
    }
    CHECK(firsts.size() == 15);
    CHECK(make_stream(9, Stream::Crash, server(0))() != make_stream(10, Stream::Crash, server(0))());
}

TEST_CASE("crash timer halves until the gap drops below one second") {
    const auto e = crash_timer_expiries(300s);
    const std::vector<Nanos> expected{100s, 150s, 175s, 187500ms, 193750ms, 196875ms, 198437500us};
    CHECK(e == expected);
    CHECK(crash_timer_expiries(2s).empty());
    CHECK(crash_timer_expiries(3s) == std::vector<Nanos>{1s});
}

TEST_CASE("crash plans") {
    ScenarioConfig cfg;
    cfg.servers = 10;
    cfg.f = 2;
    cfg.crashes_enabled = true;
    cfg.sim_time_budget = 300;
    const ServerSet protected_q{0, 1, 2, 3, 4, 5, 6, 7};
    auto rng = make_stream(1, Stream::Crash, server(0));

    cfg.crash_chance = 0;
    CHECK(schedule_crashes(cfg, rng, protected_q).empty());
    cfg.crash_chance = 1;
    const auto all = schedule_crashes(cfg, rng, protected_q);
    CHECK(all == std::vector<CrashEvent>{{8, 100s}, {9, 100s}});
    cfg.crashes_enabled = false;
    CHECK(schedule_crashes(cfg, rng, protected_q).empty());

    cfg.crashes_enabled = true;
    cfg.crash_chance = 0.3;
    const auto expiries = crash_timer_expiries(300s);
    for (int i = 0; i < 50; ++i) {
        const auto plan = schedule_crashes(cfg, rng, protected_q);
        for (const auto& c : plan) {
            CHECK_FALSE(protected_q.contains(c.server));
            CHECK(std::find(expiries.begin(), expiries.end(), c.time) != expiries.end());
        }
    }
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.crash_chance = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.crash_chance = 0.05;
    cfg.link_latency = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.link_latency = 0.01;
    cfg.readers = cfg.writers = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.readers = 1;
    cfg.f = 3;
    CHECK_THROWS_AS(run_scenario(cfg), std::invalid_argument);
    CHECK(compute_charge_from_string(to_string(ComputeCharge::WallClock)) == ComputeCharge::WallClock);
    CHECK_THROWS(compute_charge_from_string("cpu"));
}

TEST_CASE("runs replay bit for bit") {
    for (auto algo : kAll) {
        auto cfg = small(algo, 42);
        cfg.crashes_enabled = true;
        cfg.crash_chance = 0.5;
        cfg.sim_time_budget = 20;
        const auto a = run_scenario(cfg);
        const auto b = run_scenario(cfg);
        CHECK(a.history == b.history);
        CHECK(a.crashes == b.crashes);
        CHECK(a.end_time == b.end_time);
        cfg.seed = 43;
        CHECK(run_scenario(cfg).history != a.history);
    }
}

TEST_CASE("simple operations take two round trips") {
    auto cfg = small(Algorithm::Simple, 7);
    cfg.compute = ComputeCharge::None;
    const auto r = run_scenario(cfg);
    REQUIRE_FALSE(r.incomplete);
    CHECK(r.completed_reads == 20);
    CHECK(r.completed_writes == 20);
    for (const auto& op : r.ops) {
        CHECK(op.complete);
        CHECK(op.rounds == 2);
        CHECK(op.latency() >= 40ms);
        CHECK(op.latency() <= 1240ms);
    }
}

TEST_CASE("without writers every cwfr read is fast") {
    auto cfg = small(Algorithm::Cwfr, 3);
    cfg.writers = 0;
    cfg.readers = 3;
    const auto r = run_scenario(cfg);
    CHECK(r.completed_reads == 30);
    for (const auto& op : r.ops) {
        CHECK(op.rounds == 1);
        CHECK(op.tag == kInitialTag);
    }
}

TEST_CASE("cwfr writes are always slow") {
    const auto r = run_scenario(small(Algorithm::Cwfr, 4));
    for (const auto& op : r.ops) {
        if (!op.is_read) CHECK(op.rounds == 2);
    }
}

TEST_CASE("counted computation adds to latency") {
    auto cfg = small(Algorithm::Sfw, 5);
    cfg.servers = 10;
    const auto counted = run_scenario(cfg);
    cfg.compute = ComputeCharge::None;
    const auto none = run_scenario(cfg);
    CHECK(counted.compute_steps > 0);
    CHECK(counted.compute_steps == none.compute_steps);
    CHECK(counted.end_time >= none.end_time);
}

TEST_CASE("simulated histories are atomic") {
    for (auto algo : kAll) {
        for (std::uint64_t seed = 1; seed <= 12; ++seed) {
            for (bool crashes : {false, true}) {
                auto cfg = small(algo, seed);
                cfg.readers = 3;
                cfg.writers = 3;
                cfg.servers = seed % 2 ? 5 : 10;
                cfg.f = seed % 3 == 0 && cfg.servers == 10 ? 2 : 1;
                cfg.r_int = cfg.w_int = seed % 2 ? 0.0 : 0.4;
                cfg.crashes_enabled = crashes;
                cfg.crash_chance = 0.4;
                cfg.sim_time_budget = 30;
                const auto r = run_scenario(cfg);
                INFO(to_string(algo), " seed ", seed, " crashes ", crashes);
                CHECK_FALSE(r.incomplete);
                CHECK(r.value_mismatches == 0);
                const auto verdict = check_atomicity(r.history);
                CHECK_MESSAGE(verdict.ok(), describe(verdict));
                const auto correct = build_majority_system(cfg.servers, cfg.f).quorum(r.correct_quorum);
                for (const auto& c : r.crashes) CHECK_FALSE(correct.contains(c.server));
                for (const auto& op : r.ops) {
                    CHECK((op.rounds == 1 || op.rounds == 2));
                    if (algo == Algorithm::Simple) CHECK(op.rounds == 2);
                }
            }
        }
    }
}
