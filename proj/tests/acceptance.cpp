// Acceptance run: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "mwmr/bench.hpp"
#include "mwmr/checker.hpp"
#include "mwmr/netio.hpp"
#include "mwmr/predicates.hpp"
#include "mwmr/simnet.hpp"
#include "mwmr/wire.hpp"
#include "oracle.hpp"

using namespace mwmr;
using namespace std::chrono_literals;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

const Algorithm kAll[] = {Algorithm::Simple, Algorithm::Sfw, Algorithm::AprxSfw, Algorithm::Cwfr};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

oracle::Set as_set(ServerSet s) {
    oracle::Set out;
    for (auto m : s.members()) out.insert(static_cast<int>(m));
    return out;
}

Outcome quorum_tables() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    struct Row {
        std::uint32_t s, f;
        std::size_t count;
        std::uint32_t degree;
    };
    const Row rows[] = {{10, 1, 10, 9},  {15, 1, 15, 14}, {20, 1, 20, 19},  {25, 1, 25, 24},
                        {10, 2, 45, 4},  {15, 2, 105, 6}, {20, 2, 190, 9}, {25, 2, 300, 11}};
    for (const auto& r : rows) {
        const auto qs = build_majority_system(r.s, r.f);
        if (qs.size() != r.count || qs.degree() != r.degree || oracle::choose(r.s, r.s - r.f) != r.count) {
            o.fail("row (" + std::to_string(r.s) + "," + std::to_string(r.f) + ") got " + std::to_string(qs.size()) +
                   " quorums, degree " + std::to_string(qs.degree()));
        }
    }
    const auto elapsed = seconds_since(t0);
    if (elapsed >= 5) o.fail("took " + std::to_string(elapsed) + " s");
    if (o.pass) o.detail = "8 rows in " + std::to_string(elapsed) + " s";
    return o;
}

Outcome predicate_oracle() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t cases = 0, greedy_accepts = 0;
    for (std::uint32_t s : {4U, 5U, 6U}) {
        const auto qs = build_majority_system(s, 1);
        std::vector<oracle::Set> quorums;
        for (auto q : qs.quorums()) quorums.push_back(as_set(q));
        for (QuorumIndex q = 0; q < qs.size(); ++q) {
            const auto members = qs.quorum(q).members();
            for (std::uint64_t mask = 0; mask < (1ULL << members.size()); ++mask) {
                ServerSet ms;
                for (std::size_t b = 0; b < members.size(); ++b) {
                    if ((mask >> b) & 1U) ms.insert(members[b]);
                }
                for (int k = 0; k <= 2; ++k) {
                    ++cases;
                    const bool expected = oracle::predicate(quorums, as_set(qs.quorum(q)), as_set(ms), k);
                    const bool exact = exact_predicate({qs, q, ms, k}).has_value();
                    if (exact != expected) o.fail("exact disagrees at |S|=" + std::to_string(s));
                    try {
                        if (greedy_predicate({qs, q, ms, k})) {
                            ++greedy_accepts;
                            if (!expected) o.fail("greedy accepted what exact rejects");
                        }
                    } catch (const std::exception& e) {
                        o.fail(std::string("greedy threw: ") + e.what());
                    }
                }
            }
        }
    }
    const auto elapsed = seconds_since(t0);
    if (elapsed >= 60) o.fail("took " + std::to_string(elapsed) + " s");
    if (o.pass) {
        o.detail = std::to_string(cases) + " cases, " + std::to_string(greedy_accepts) + " greedy accepts";
    }
    return o;
}

ScenarioConfig contract_config(Algorithm algo, std::uint32_t f, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.algorithm = algo;
    cfg.readers = 5;
    cfg.writers = 5;
    cfg.servers = 10;
    cfg.f = f;
    cfg.seed = seed;
    return cfg;
}

Outcome round_contracts() {
    Outcome o;
    std::uint64_t ops = 0;
    for (auto algo : kAll) {
        for (std::uint32_t f : {1U, 2U}) {
            for (std::uint64_t seed = 1; seed <= 50; ++seed) {
                const auto r = run_scenario(contract_config(algo, f, seed));
                const auto where = std::string(to_string(algo)) + " f=" + std::to_string(f) + " seed " + std::to_string(seed);
                if (r.incomplete) o.fail(where + " did not finish");
                for (const auto& op : r.ops) {
                    if (!op.complete) continue;
                    ++ops;
                    if (op.rounds != 1 && op.rounds != 2) o.fail(where + " reported " + std::to_string(op.rounds));
                    if (algo == Algorithm::Simple && op.rounds != 2) o.fail(where + " fast simple operation");
                    if (algo == Algorithm::Cwfr && !op.is_read && op.rounds != 2) o.fail(where + " fast cwfr write");
                }
            }
        }
    }
    if (o.pass) o.detail = std::to_string(ops) + " operations over 400 runs";
    return o;
}

std::optional<Rule> rule_of(const std::vector<HistoryEvent>& h) {
    const auto v = check_atomicity(h);
    return v.violation ? std::optional<Rule>(v.violation->rule) : std::nullopt;
}

struct Builder {
    std::vector<HistoryEvent> events;
    std::map<std::uint32_t, std::uint32_t> read_seq;

    Builder& write(std::uint32_t w, long from, long to, Tag tag) {
        const auto seq = tag.wseq;
        events.push_back({writer(w), seq, EventKind::WriteInvoke, Nanos{from}, {}, 0});
        events.push_back({writer(w), seq, EventKind::WriteRespond, Nanos{to}, tag, 2});
        return *this;
    }
    Builder& read(std::uint32_t r, long from, long to, Tag tag) {
        const auto seq = ++read_seq[r];
        events.push_back({reader(r), seq, EventKind::ReadInvoke, Nanos{from}, {}, 0});
        events.push_back({reader(r), seq, EventKind::ReadRespond, Nanos{to}, tag, 1});
        return *this;
    }
};

Outcome atomicity() {
    Outcome o;
    std::uint64_t histories = 0;
    for (auto algo : kAll) {
        for (std::uint32_t f : {1U, 2U}) {
            for (std::uint64_t seed = 1; seed <= 50; ++seed) {
                for (bool crashes : {false, true}) {
                    auto cfg = contract_config(algo, f, seed);
                    cfg.crashes_enabled = crashes;
                    const auto r = run_scenario(cfg);
                    ++histories;
                    const auto verdict = check_atomicity(r.history);
                    if (!verdict.ok()) {
                        o.fail(std::string(to_string(algo)) + " f=" + std::to_string(f) + " seed " + std::to_string(seed) + ": " +
                               describe(verdict));
                    }
                    if (r.value_mismatches) o.fail(std::string(to_string(algo)) + " returned a value not written under its tag");
                }
            }
        }
    }
    const std::pair<Rule, std::vector<HistoryEvent>> bad[] = {
        {Rule::C0, Builder{}.write(0, 0, 100, {3, 0, 1}).read(0, 10, 20, {3, 0, 1}).read(1, 10, 20, {4, 0, 1}).events},
        {Rule::C1, Builder{}.read(0, 0, 10, {1, 0, 1}).write(0, 20, 30, {1, 0, 1}).events},
        {Rule::C2, Builder{}.write(0, 0, 10, {2, 0, 1}).write(1, 20, 30, {1, 1, 1}).events},
        {Rule::C3,
         Builder{}.write(0, 0, 10, {1, 0, 1}).write(1, 20, 30, {2, 1, 1}).read(0, 40, 50, {1, 0, 1}).events},
        {Rule::C4, Builder{}.write(0, 0, 100, {1, 0, 1}).read(0, 10, 20, {1, 0, 1}).read(1, 30, 40, kInitialTag).events},
        {Rule::C5,
         Builder{}.write(0, 0, 100, {5, 0, 1}).read(0, 10, 20, {5, 0, 1}).write(1, 30, 40, {4, 1, 1}).events},
    };
    for (const auto& [rule, h] : bad) {
        const auto got = rule_of(h);
        if (got != rule) {
            o.fail("hand-built " + std::string(to_string(rule)) + " history got " +
                   (got ? std::string(to_string(*got)) : std::string("ok")));
        }
    }
    if (o.pass) o.detail = std::to_string(histories) + " histories atomic, 6 violations caught";
    return o;
}

std::uint64_t slow_reads(const RunResult& r) {
    std::uint64_t n = 0;
    for (const auto& op : r.ops) n += op.is_read && op.complete && op.rounds == 2;
    return n;
}

Outcome approximation_bound() {
    Outcome o;
    const auto factor = static_cast<std::uint64_t>(std::ceil(std::log2(10.0)));
    std::uint64_t total_sfw = 0, total_aprx = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sfw = slow_reads(run_scenario(contract_config(Algorithm::Sfw, 1, seed)));
        const auto aprx = slow_reads(run_scenario(contract_config(Algorithm::AprxSfw, 1, seed)));
        total_sfw += sfw;
        total_aprx += aprx;
        if (aprx > factor * std::max<std::uint64_t>(1, sfw)) {
            o.fail("seed " + std::to_string(seed) + ": aprx " + std::to_string(aprx) + " vs sfw " + std::to_string(sfw));
        }
    }
    if (o.pass) {
        o.detail = "slow reads sfw " + std::to_string(total_sfw) + ", aprx " + std::to_string(total_aprx);
    }
    return o;
}

Metrics default_cell(Algorithm algo) {
    std::vector<RunResult> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ScenarioConfig cfg;
        cfg.algorithm = algo;
        cfg.readers = 10;
        cfg.writers = 10;
        cfg.servers = 10;
        cfg.f = 1;
        cfg.seed = seed;
        runs.push_back(run_scenario(cfg));
    }
    return aggregate_metrics(runs);
}

Outcome fast_path_trend() {
    Outcome o;
    const auto cwfr = default_cell(Algorithm::Cwfr);
    const auto simple = default_cell(Algorithm::Simple);
    if (!cwfr.avg_read_latency || !simple.avg_read_latency || !cwfr.pct_slow_reads) {
        o.fail("no terminated readers");
        return o;
    }
    const double c = to_double(*cwfr.avg_read_latency), s = to_double(*simple.avg_read_latency);
    if (!(*cwfr.avg_read_latency < *simple.avg_read_latency)) o.fail("cwfr mean read latency not below simple");
    if (!(*cwfr.pct_slow_reads < 30.0)) o.fail("cwfr slow reads " + std::to_string(*cwfr.pct_slow_reads) + "%");
    std::ostringstream d;
    d << "read latency cwfr " << c << " s, simple " << s << " s; cwfr slow reads " << *cwfr.pct_slow_reads << "%";
    if (o.pass) o.detail = d.str();
    else o.detail += " (" + d.str() + ")";
    return o;
}

Outcome degenerate_intersection() {
    Outcome o;
    std::uint64_t writes = 0, slow = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = run_scenario(contract_config(Algorithm::AprxSfw, 2, seed));
        for (const auto& op : r.ops) {
            if (op.is_read || !op.complete) continue;
            ++writes;
            slow += op.rounds == 2;
            if (op.rounds != 1 && op.rounds != 2) o.fail("bad round count");
        }
    }
    if (writes == 0) {
        o.fail("no writes completed");
        return o;
    }
    const double pct = 100.0 * static_cast<double>(slow) / static_cast<double>(writes);
    if (pct < 95.0) o.fail("only " + std::to_string(pct) + "% slow writes");
    if (o.pass) o.detail = std::to_string(slow) + " of " + std::to_string(writes) + " writes slow";
    return o;
}

Outcome determinism() {
    Outcome o;
    auto csv = [] {
        std::ostringstream out;
        write_matrix_csv(out, run_matrix(smoke_matrix()));
        return out.str();
    };
    const auto a = csv();
    const auto b = csv();
    if (a != b) o.fail("csv differs between runs");
    if (o.pass) o.detail = std::to_string(a.size()) + " identical bytes";
    return o;
}

Outcome network_smoke() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    for (auto algo : kAll) {
        LoopbackOptions opt;
        opt.algorithm = algo;
        opt.servers = 5;
        opt.f = 1;
        opt.readers = 2;
        opt.writers = 2;
        opt.ops = 20;
        try {
            const auto r = run_loopback(opt);
            if (r.incomplete || r.completed_reads != 40 || r.completed_writes != 40) {
                o.fail(std::string(to_string(algo)) + " did not complete");
            }
            const auto verdict = check_atomicity(r.history, CheckOptions{50ms});
            if (!verdict.ok()) o.fail(std::string(to_string(algo)) + ": " + describe(verdict));
        } catch (const std::exception& e) {
            o.fail(std::string(to_string(algo)) + " threw: " + e.what());
        }
    }
    std::mt19937_64 rng(2024);
    auto tag = [&] { return Tag{rng(), static_cast<std::uint32_t>(rng() % 0x10000), static_cast<std::uint32_t>(rng())}; };
    auto value = [&](std::size_t max_len) {
        std::string v(rng() % (max_len + 1), '\0');
        for (auto& ch : v) ch = static_cast<char>(rng());
        return v;
    };
    for (int i = 0; i < 10000; ++i) {
        ProtocolMessage m;
        m.kind = static_cast<MessageKind>(1 + rng() % 7);
        m.sender = {static_cast<Role>(rng() % 3), static_cast<std::uint32_t>(rng() % 0x10000)};
        m.op_seq = static_cast<std::uint32_t>(rng());
        if (rng() & 1U) m.tag = tag();
        m.value = value(64);
        for (auto n = rng() % 4; n > 0; --n) {
            m.inprogress.push_back({static_cast<std::uint32_t>(rng() % 0x10000), {tag(), value(8)}});
        }
        if (rng() & 1U) m.confirmed = tag();
        if (!(decode_frame(encode_frame(m)) == m)) {
            o.fail("frame " + std::to_string(i) + " did not round-trip");
            break;
        }
    }
    const auto elapsed = seconds_since(t0);
    if (elapsed >= 300) o.fail("took " + std::to_string(elapsed) + " s");
    if (o.pass) o.detail = "4 loopback clusters atomic, 10000 frames round-trip, " + std::to_string(elapsed) + " s";
    return o;
}

Outcome weighted_average_example() {
    Outcome o;
    RunSummary a, b;
    a.reads.total_latency = 100;
    a.reads.terminated = 10;
    b.reads.total_latency = 120;
    b.reads.terminated = 15;
    const std::vector<RunSummary> runs{a, b};
    const auto m = aggregate_metrics(runs);
    if (m.nonweighted_read_latency != Rational(9)) o.fail("non-weighted average is not 9");
    if (m.avg_read_latency != Rational(220, 25)) o.fail("weighted average is not 220/25");
    if (o.pass) o.detail = "non-weighted 9 s, weighted 44/5 s";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"quorum tables", quorum_tables},
        {"predicate oracle equivalence", predicate_oracle},
        {"round-count contracts", round_contracts},
        {"atomicity", atomicity},
        {"approximation bound", approximation_bound},
        {"fast-path trend", fast_path_trend},
        {"degenerate intersection", degenerate_intersection},
        {"determinism", determinism},
        {"network smoke", network_smoke},
        {"weighted average", weighted_average_example},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, run] : criteria) {
        ++n;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        failed += !o.pass;
        std::printf("criterion %d: %s %s: %s\n", n, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
