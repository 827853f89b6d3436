// mwmr: simulation benchmarks, history checking, quorum files and the TCP runtime.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mwmr/bench.hpp"
#include "mwmr/checker.hpp"
#include "mwmr/netio.hpp"
#include "mwmr/quorums.hpp"
#include "mwmr/simnet.hpp"

namespace {

std::atomic<bool> g_interrupt{false};

void on_signal(int) { g_interrupt = true; }

void install_signal_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

struct BenchArgs {
    std::string algo = "all";
    std::string mode = "sim";
    std::string matrix;
    std::uint32_t readers = 2;
    std::uint32_t writers = 2;
    std::uint32_t servers = 5;
    std::uint32_t f = 1;
    double r_int = 4.0;
    double w_int = 4.0;
    double link = 0.010;
    double proc = 0.300;
    std::uint32_t ops = 25;
    std::uint32_t repeats = 5;
    std::uint64_t seed = 1;
    bool crashes = false;
    double crash_chance = 0.05;
    double budget = 0.0;
    std::string compute = "counted";
    unsigned jobs = 1;
    std::string out;
    std::string history;
};

std::vector<mwmr::Algorithm> algorithms_from(const std::string& text) {
    if (text == "all") {
        return {mwmr::Algorithm::Simple, mwmr::Algorithm::Sfw, mwmr::Algorithm::AprxSfw, mwmr::Algorithm::Cwfr};
    }
    return {mwmr::algorithm_from_string(text)};
}

std::vector<mwmr::MatrixRow> bench_net(const BenchArgs& a) {
    using namespace mwmr;
    std::vector<MatrixRow> rows;
    for (auto algo : algorithms_from(a.algo)) {
        MatrixRow row;
        row.algorithm = algo;
        row.cell = {a.readers, a.writers, a.servers, a.f, 0.0};
        row.seed = a.seed;
        try {
            const auto qs = build_majority_system(a.servers, a.f);
            row.degree = qs.degree();
            row.quorums = qs.size();
            std::vector<RunSummary> runs;
            for (std::uint32_t i = 0; i < a.repeats; ++i) {
                LoopbackOptions o;
                o.algorithm = algo;
                o.readers = a.readers;
                o.writers = a.writers;
                o.servers = a.servers;
                o.f = a.f;
                o.ops = a.ops;
                o.r_int = a.r_int;
                o.w_int = a.w_int;
                o.seed = a.seed + i;
                const auto result = run_loopback(o);
                if (i == 0 && !a.history.empty()) save_history(a.history, result.history);
                CheckOptions check;
                check.skew = std::chrono::milliseconds(50);
                if (!check_atomicity(result.history, check).ok()) {
                    row.error = "atomicity";
                    break;
                }
                runs.push_back(summarize_run(result));
            }
            if (!row.error) row.metrics = aggregate_metrics(runs);
        } catch (const std::invalid_argument&) {
            row.error = "invalid_config";
        } catch (const std::exception& e) {
            std::cerr << "mwmr bench: " << to_string(algo) << ": " << e.what() << '\n';
            row.error = "network";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_bench(const BenchArgs& a) {
    using namespace mwmr;
    std::vector<MatrixRow> rows;
    if (a.mode == "net") {
        rows = bench_net(a);
    } else {
        MatrixSpec spec;
        if (a.matrix == "smoke") spec = smoke_matrix();
        else if (a.matrix == "desk") spec = desk_matrix();
        else if (a.matrix == "full") spec = full_matrix();
        else if (a.matrix == "delay") spec = delay_sweep_matrix();
        else spec.cells = {{a.readers, a.writers, a.servers, a.f, a.link}};
        spec.algorithms = algorithms_from(a.algo);
        if (a.matrix.empty() || a.matrix == "desk" || a.matrix == "full" || a.matrix == "delay") {
            spec.repeats = a.repeats;
        }
        spec.base_seed = a.seed;
        spec.jobs = a.jobs;
        spec.base.r_int = a.r_int;
        spec.base.w_int = a.w_int;
        spec.base.proc_delay_max = a.proc;
        spec.base.ops_per_client = a.ops;
        spec.base.crashes_enabled = a.crashes;
        spec.base.crash_chance = a.crash_chance;
        spec.base.sim_time_budget = a.budget;
        spec.base.compute = compute_charge_from_string(a.compute);
        rows = run_matrix(spec);
        if (!a.history.empty()) {
            auto cfg = spec.base;
            cfg.algorithm = spec.algorithms.front();
            const auto& cell = spec.cells.front();
            cfg.readers = cell.readers;
            cfg.writers = cell.writers;
            cfg.servers = cell.servers;
            cfg.f = cell.f;
            cfg.link_latency = cell.link_latency;
            cfg.seed = spec.base_seed;
            save_history(a.history, run_scenario(cfg).history);
        }
    }
    if (a.out.empty() || a.out == "-") {
        write_matrix_csv(std::cout, rows);
    } else {
        std::ofstream out(a.out);
        if (!out) throw std::runtime_error("cannot write " + a.out);
        write_matrix_csv(out, rows);
    }
    // Error rows are still written; the exit status flags them.
    for (const auto& r : rows) {
        if (r.error) return 1;
    }
    return 0;
}

int cmd_check(const std::string& path, double skew) {
    const auto history = mwmr::load_history(path);
    mwmr::CheckOptions options;
    options.skew = mwmr::seconds(skew);
    const auto verdict = mwmr::check_atomicity(history, options);
    std::cout << mwmr::describe(verdict) << '\n';
    return verdict.ok() ? 0 : 1;
}

int cmd_quorums(std::uint32_t servers, std::uint32_t f, const std::string& out) {
    const auto qs = mwmr::build_majority_system(servers, f);
    if (out.empty() || out == "-") {
        mwmr::write_quorum_file(std::cout, qs);
    } else {
        mwmr::save_quorum_file(out, qs);
        std::cerr << qs.size() << " quorums of size " << servers - f << ", intersection degree " << qs.degree()
                  << " -> " << out << '\n';
    }
    return 0;
}

int cmd_serve(const std::string& config) {
    install_signal_handlers();
    mwmr::run_server(mwmr::load_deployment(config), &g_interrupt);
    return 0;
}

int cmd_client(const std::string& config) {
    install_signal_handlers();
    const auto cfg = mwmr::load_deployment(config);
    const auto run = mwmr::run_client(cfg, &g_interrupt);
    std::size_t done = 0;
    for (const auto& op : run.ops) done += op.complete;
    std::cerr << done << "/" << run.ops.size() << " operations completed" << (run.interrupted ? " (interrupted)" : "")
              << '\n';
    return run.interrupted ? 130 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-writer multi-reader atomic register algorithms: simulation and TCP runtime"};
    app.require_subcommand(1);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Run scenarios and write a metrics CSV");
    b->add_option("--algo", bench.algo, "simple|sfw|aprxsfw|cwfr|all")
        ->check(CLI::IsMember({"simple", "sfw", "aprxsfw", "cwfr", "all"}));
    b->add_option("--mode", bench.mode, "sim or net (loopback cluster)")->check(CLI::IsMember({"sim", "net"}));
    b->add_option("--matrix", bench.matrix, "Predefined scenario grid")
        ->check(CLI::IsMember({"smoke", "desk", "full", "delay"}));
    b->add_option("--readers", bench.readers);
    b->add_option("--writers", bench.writers);
    b->add_option("--servers", bench.servers);
    b->add_option("-f", bench.f, "Tolerated server crashes");
    b->add_option("--rint", bench.r_int, "Max gap between reads, seconds");
    b->add_option("--wint", bench.w_int, "Max gap between writes, seconds");
    b->add_option("--link-latency", bench.link, "Seconds");
    b->add_option("--proc-delay", bench.proc, "Max extra per-message delay, seconds");
    b->add_option("--ops", bench.ops, "Operations per client");
    b->add_option("--repeats", bench.repeats);
    b->add_option("--seed", bench.seed);
    b->add_flag("--crashes", bench.crashes, "Enable server crashes");
    b->add_option("--crash-chance", bench.crash_chance);
    b->add_option("--budget", bench.budget, "Simulated time budget, seconds (0 = automatic)");
    b->add_option("--compute", bench.compute, "none|counted|wallclock")
        ->check(CLI::IsMember({"none", "counted", "wallclock"}));
    b->add_option("--jobs", bench.jobs, "Parallel workers");
    b->add_option("--out", bench.out, "CSV path (default stdout)");
    b->add_option("--history", bench.history, "Write the first run's history CSV here");

    std::string history_path;
    double skew = 0.05;
    auto* c = app.add_subcommand("check", "Check a history CSV for atomicity");
    c->add_option("--history", history_path)->required();
    c->add_option("--skew", skew, "Clock-skew allowance in seconds");

    std::uint32_t q_servers = 0, q_f = 0;
    std::string q_out;
    auto* q = app.add_subcommand("quorums", "Write a majority quorum system file");
    q->add_option("--servers", q_servers)->required();
    q->add_option("-f", q_f)->required();
    q->add_option("--out", q_out);

    std::string config;
    auto* s = app.add_subcommand("serve", "Run one server from a deployment config");
    s->add_option("--config", config)->required();
    auto* cl = app.add_subcommand("client", "Run one reader or writer from a deployment config");
    cl->add_option("--config", config)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*b) return cmd_bench(bench);
        if (*c) return cmd_check(history_path, skew);
        if (*q) return cmd_quorums(q_servers, q_f, q_out);
        if (*s) return cmd_serve(config);
        if (*cl) return cmd_client(config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "mwmr: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mwmr: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
