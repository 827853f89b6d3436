#include "mwmr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mwmr/checker.hpp"

namespace mwmr {

RunSummary summarize_run(const RunResult& result) {
    struct PerProcess {
        Nanos total{0};
        std::uint64_t completed = 0;
    };
    std::map<ProcessId, PerProcess> per_process;
    RunSummary out;
    out.incomplete = result.incomplete;
    for (const auto& op : result.ops) {
        auto& pp = per_process[op.process];
        if (!op.complete) continue;
        auto& role = op.is_read ? out.reads : out.writes;
        ++role.completed_ops;
        if (op.rounds == 2) ++role.slow_ops;
        pp.total += op.latency();
        ++pp.completed;
    }
    for (const auto& [p, pp] : per_process) {
        if (pp.completed == 0) continue;
        if (std::find(result.unfinished.begin(), result.unfinished.end(), p) != result.unfinished.end()) continue;
        auto& role = p.role == Role::Reader ? out.reads : out.writes;
        role.total_latency += Rational(pp.total.count(), 1'000'000'000) / pp.completed;
        ++role.terminated;
    }
    return out;
}

std::optional<Rational> weighted_average(std::span<const RoleTotals> runs) {
    Rational total = 0;
    std::uint64_t processes = 0;
    for (const auto& r : runs) {
        total += r.total_latency;
        processes += r.terminated;
    }
    if (processes == 0) return std::nullopt;
    return total / processes;
}

std::optional<Rational> nonweighted_average(std::span<const RoleTotals> runs) {
    Rational sum = 0;
    std::uint64_t counted = 0;
    for (const auto& r : runs) {
        if (r.terminated == 0) continue;
        sum += r.total_latency / r.terminated;
        ++counted;
    }
    if (counted == 0) return std::nullopt;
    return sum / counted;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Metrics aggregate_metrics(std::span<const RunSummary> runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate_metrics needs at least one run");
    Metrics m;
    m.runs.assign(runs.begin(), runs.end());
    std::vector<RoleTotals> reads, writes;
    std::uint64_t slow_r = 0, slow_w = 0;
    for (const auto& r : runs) {
        reads.push_back(r.reads);
        writes.push_back(r.writes);
        m.completed_reads += r.reads.completed_ops;
        m.completed_writes += r.writes.completed_ops;
        slow_r += r.reads.slow_ops;
        slow_w += r.writes.slow_ops;
    }
    if (m.completed_reads) m.pct_slow_reads = 100.0 * slow_r / m.completed_reads;
    if (m.completed_writes) m.pct_slow_writes = 100.0 * slow_w / m.completed_writes;
    m.avg_read_latency = weighted_average(reads);
    m.avg_write_latency = weighted_average(writes);
    m.nonweighted_read_latency = nonweighted_average(reads);
    m.nonweighted_write_latency = nonweighted_average(writes);
    return m;
}

Metrics aggregate_metrics(std::span<const RunResult> results) {
    std::vector<RunSummary> runs;
    runs.reserve(results.size());
    for (const auto& r : results) runs.push_back(summarize_run(r));
    return aggregate_metrics(runs);
}

namespace {

MatrixRow run_cell(const MatrixSpec& spec, Algorithm algo, const MatrixCell& cell) {
    MatrixRow row;
    row.algorithm = algo;
    row.cell = cell;
    row.seed = spec.base_seed;
    std::shared_ptr<const QuorumSystem> qs;
    try {
        qs = std::make_shared<const QuorumSystem>(build_majority_system(cell.servers, cell.f));
    } catch (const std::invalid_argument&) {
        row.error = "invalid_config";
        return row;
    }
    row.degree = qs->degree();
    row.quorums = qs->size();
    std::vector<RunSummary> runs;
    for (std::uint32_t i = 0; i < spec.repeats; ++i) {
        auto cfg = spec.base;
        cfg.algorithm = algo;
        cfg.readers = cell.readers;
        cfg.writers = cell.writers;
        cfg.servers = cell.servers;
        cfg.f = cell.f;
        cfg.link_latency = cell.link_latency;
        cfg.seed = spec.base_seed + i;
        RunResult result;
        try {
            result = run_scenario(cfg, qs);
        } catch (const ProtocolError&) {
            row.error = "protocol_error";
            return row;
        } catch (const std::invalid_argument&) {
            row.error = "invalid_config";
            return row;
        }
        if (!check_atomicity(result.history).ok() || result.value_mismatches) {
            row.error = "atomicity";
            return row;
        }
        runs.push_back(summarize_run(result));
    }
    if (runs.empty()) {
        row.error = "no_runs";
        return row;
    }
    row.metrics = aggregate_metrics(runs);
    return row;
}

std::vector<MatrixCell> grid(std::initializer_list<std::uint32_t> clients, std::initializer_list<std::uint32_t> servers,
                             std::initializer_list<std::uint32_t> fs) {
    std::vector<MatrixCell> cells;
    for (auto c : clients) {
        for (auto s : servers) {
            for (auto f : fs) cells.push_back({c, c, s, f, 0.010});
        }
    }
    return cells;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

template <typename T>
std::string optional_field(const std::optional<T>& v, int digits) {
    if (!v) return {};
    if constexpr (std::is_same_v<T, Rational>) {
        return fixed(to_double(*v), digits);
    } else {
        return fixed(*v, digits);
    }
}

}  // namespace

std::vector<MatrixRow> run_matrix(const MatrixSpec& spec) {
    std::vector<std::pair<Algorithm, MatrixCell>> tasks;
    for (auto algo : spec.algorithms) {
        for (const auto& cell : spec.cells) tasks.emplace_back(algo, cell);
    }
    std::vector<MatrixRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            rows[i] = run_cell(spec, tasks[i].first, tasks[i].second);
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return rows;
}

MatrixSpec smoke_matrix() {
    MatrixSpec spec;
    spec.cells = {{2, 2, 5, 1, 0.010}};
    spec.repeats = 2;
    return spec;
}

MatrixSpec desk_matrix() {
    MatrixSpec spec;
    spec.cells = grid({10, 20}, {10, 15}, {1, 2});
    return spec;
}

MatrixSpec full_matrix() {
    MatrixSpec spec;
    spec.cells = grid({10, 20, 40, 80}, {10, 15, 20, 25}, {1, 2});
    return spec;
}

MatrixSpec delay_sweep_matrix() {
    MatrixSpec spec;
    spec.cells = {{10, 10, 15, 2, 0.010}, {10, 10, 15, 2, 0.500}};
    return spec;
}

void write_matrix_csv(std::ostream& out, std::span<const MatrixRow> rows) {
    out << kMatrixHeader << '\n';
    for (const auto& r : rows) {
        out << to_string(r.algorithm) << ',' << r.cell.readers << ',' << r.cell.writers << ',' << r.cell.servers
            << ',' << r.cell.f << ',' << r.degree << ',' << r.quorums << ',' << r.seed << ',';
        if (r.error) {
            out << "error:" << *r.error << ",,,,,\n";
            continue;
        }
        const auto& m = r.metrics;
        out << optional_field(m.pct_slow_reads, 2) << ',' << optional_field(m.pct_slow_writes, 2) << ','
            << optional_field(m.avg_read_latency, 6) << ',' << optional_field(m.avg_write_latency, 6) << ','
            << m.completed_reads << ',' << m.completed_writes << '\n';
    }
}

}  // namespace mwmr
