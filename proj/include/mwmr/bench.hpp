#pragma once

// Experiment harness: per-run summaries, weighted averages across runs, scenario matrices
// and their CSV form.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mwmr/protocols.hpp"
#include "mwmr/simnet.hpp"

namespace mwmr {

using Rational = boost::multiprecision::cpp_rational;

/// Latency bookkeeping for one role (readers or writers) in one run.
struct RoleTotals {
    /// Sum over terminated processes of each one's mean operation latency, in seconds.
    Rational total_latency = 0;
    std::uint32_t terminated = 0;
    std::uint64_t completed_ops = 0;
    std::uint64_t slow_ops = 0;
};

struct RunSummary {
    RoleTotals reads;
    RoleTotals writes;
    bool incomplete = false;
};

/// A process has terminated when it completed every operation it was scheduled to run.
RunSummary summarize_run(const RunResult& result);

/// Undefined (nullopt) when no run had a terminated process of that role.
std::optional<Rational> weighted_average(std::span<const RoleTotals> runs);
std::optional<Rational> nonweighted_average(std::span<const RoleTotals> runs);

struct Metrics {
    std::optional<double> pct_slow_reads;
    std::optional<double> pct_slow_writes;
    std::optional<Rational> avg_read_latency;  // weighted
    std::optional<Rational> avg_write_latency;
    std::optional<Rational> nonweighted_read_latency;
    std::optional<Rational> nonweighted_write_latency;
    std::uint64_t completed_reads = 0;
    std::uint64_t completed_writes = 0;
    std::vector<RunSummary> runs;
};

/// Throws std::invalid_argument on an empty list.
Metrics aggregate_metrics(std::span<const RunSummary> runs);
Metrics aggregate_metrics(std::span<const RunResult> results);

double to_double(const Rational& r);

struct MatrixCell {
    std::uint32_t readers = 2;
    std::uint32_t writers = 2;
    std::uint32_t servers = 5;
    std::uint32_t f = 1;
    double link_latency = 0.010;
};

struct MatrixSpec {
    std::vector<Algorithm> algorithms{Algorithm::Simple, Algorithm::Sfw, Algorithm::AprxSfw, Algorithm::Cwfr};
    std::vector<MatrixCell> cells;
    std::uint32_t repeats = 5;
    std::uint64_t base_seed = 1;
    /// Template for everything a cell does not set (intervals, ops, crashes, compute charge).
    ScenarioConfig base;
    unsigned jobs = 1;
};

struct MatrixRow {
    Algorithm algorithm = Algorithm::Simple;
    MatrixCell cell;
    std::uint32_t degree = 0;
    std::size_t quorums = 0;
    std::uint64_t seed = 0;
    Metrics metrics;
    /// Set when the cell could not run; metrics are then empty.
    std::optional<std::string> error;
};

/// Runs `repeats` scenarios per (algorithm, cell) with seeds base_seed + run index, and checks
/// each history. Failures become error rows: invalid_config, protocol_error, atomicity.
std::vector<MatrixRow> run_matrix(const MatrixSpec& spec);

/// |R| = |W| = 2, |S| = 5, f = 1, 2 repeats.
MatrixSpec smoke_matrix();
/// |R|,|W| in {10, 20}, |S| in {10, 15}, f in {1, 2}.
MatrixSpec desk_matrix();
/// |R|,|W| in {10, 20, 40, 80}, |S| in {10, 15, 20, 25}, f in {1, 2}.
MatrixSpec full_matrix();
/// |S| = 15, f = 2 with the link latency raised to 500 ms.
MatrixSpec delay_sweep_matrix();

inline constexpr const char* kMatrixHeader =
    "algo,readers,writers,servers,f,degree,quorums,seed,pct_slow_r,pct_slow_w,avg_lat_r,avg_lat_w,completed_r,"
    "completed_w";

void write_matrix_csv(std::ostream& out, std::span<const MatrixRow> rows);

}  // namespace mwmr
