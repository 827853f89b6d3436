#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mwmr/bench.hpp"
#include "mwmr/checker.hpp"
#include "mwmr/predicates.hpp"
#include "mwmr/simnet.hpp"
#include "mwmr/wire.hpp"

namespace py = pybind11;
using namespace mwmr;

namespace {

ServerSet to_set(const std::vector<std::uint32_t>& members) {
    ServerSet s;
    for (auto m : members) s.insert(m);
    return s;
}

py::object fraction(const std::optional<Rational>& r) {
    if (!r) return py::none();
    const auto text = boost::multiprecision::numerator(*r).str() + "/" + boost::multiprecision::denominator(*r).str();
    return py::module_::import("fractions").attr("Fraction")(text);
}

py::object witness(const std::optional<PredicateWitness>& w) {
    if (!w) return py::none();
    return py::cast(w->quorum_indices);
}

py::dict event_dict(const HistoryEvent& e) {
    py::dict d;
    d["role"] = std::string(to_string(e.process.role));
    d["index"] = e.process.index;
    d["op_seq"] = e.op_seq;
    d["kind"] = std::string(to_string(e.kind));
    d["time_ns"] = e.time.count();
    d["tag"] = py::make_tuple(e.tag.ts, e.tag.wid, e.tag.wseq);
    d["rounds"] = e.rounds;
    return d;
}

HistoryEvent event_from(const py::dict& d) {
    HistoryEvent e;
    e.process = {role_from_string(d["role"].cast<std::string>()), d["index"].cast<std::uint32_t>()};
    e.op_seq = d["op_seq"].cast<std::uint32_t>();
    e.kind = event_kind_from_string(d["kind"].cast<std::string>());
    e.time = Nanos{d["time_ns"].cast<std::int64_t>()};
    if (d.contains("tag")) {
        const auto t = d["tag"].cast<std::tuple<std::uint64_t, std::uint32_t, std::uint32_t>>();
        e.tag = {std::get<0>(t), std::get<1>(t), std::get<2>(t)};
    }
    if (d.contains("rounds")) e.rounds = d["rounds"].cast<std::uint8_t>();
    return e;
}

std::vector<HistoryEvent> events_from(const py::list& history) {
    std::vector<HistoryEvent> out;
    for (const auto& item : history) out.push_back(event_from(item.cast<py::dict>()));
    return out;
}

}  // namespace

PYBIND11_MODULE(_mwmr, m) {
    m.doc() = "Multi-writer multi-reader atomic register algorithms";

    py::register_exception<ProtocolError>(m, "ProtocolError");

    py::class_<QuorumSystem>(m, "QuorumSystem")
        .def_property_readonly("server_count", &QuorumSystem::server_count)
        .def_property_readonly("f", &QuorumSystem::f)
        .def_property_readonly("degree", &QuorumSystem::degree)
        .def("__len__", &QuorumSystem::size)
        .def("quorum", [](const QuorumSystem& qs, QuorumIndex i) { return qs.quorum(i).members(); })
        .def("quorums",
             [](const QuorumSystem& qs) {
                 std::vector<std::vector<std::uint32_t>> out;
                 for (auto q : qs.quorums()) out.push_back(q.members());
                 return out;
             })
        .def("to_text", [](const QuorumSystem& qs) {
            std::ostringstream out;
            write_quorum_file(out, qs);
            return out.str();
        });

    m.def("build_majority_system", &build_majority_system, py::arg("servers"), py::arg("f"));
    m.def("majority_degree", &majority_degree, py::arg("servers"), py::arg("f"));
    m.def("verify_intersection_degree", [](const QuorumSystem& qs, std::uint32_t n) {
        return verify_intersection_degree(qs, n).holds;
    });
    m.def("write_bound", &write_bound);
    m.def("read_bound", &read_bound);

    m.def(
        "exact_predicate",
        [](const QuorumSystem& qs, QuorumIndex q, const std::vector<std::uint32_t>& ms, int k) {
            return witness(exact_predicate({qs, q, to_set(ms), k}));
        },
        py::arg("qs"), py::arg("quorum"), py::arg("ms"), py::arg("k"),
        "Quorum indices witnessing the predicate, [] when MS = Q, None when it fails.");
    m.def(
        "greedy_predicate",
        [](const QuorumSystem& qs, QuorumIndex q, const std::vector<std::uint32_t>& ms, int k) {
            return witness(greedy_predicate({qs, q, to_set(ms), k}));
        },
        py::arg("qs"), py::arg("quorum"), py::arg("ms"), py::arg("k"));

    m.def(
        "run_scenario",
        [](const std::string& algorithm, std::uint32_t readers, std::uint32_t writers, std::uint32_t servers,
           std::uint32_t f, std::uint32_t ops, double r_int, double w_int, bool crashes, std::uint64_t seed) {
            ScenarioConfig cfg;
            cfg.algorithm = algorithm_from_string(algorithm);
            cfg.readers = readers;
            cfg.writers = writers;
            cfg.servers = servers;
            cfg.f = f;
            cfg.ops_per_client = ops;
            cfg.r_int = r_int;
            cfg.w_int = w_int;
            cfg.crashes_enabled = crashes;
            cfg.seed = seed;
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_scenario(cfg);
            }
            py::dict out;
            py::list history;
            for (const auto& e : r.history) history.append(event_dict(e));
            out["history"] = history;
            out["completed_reads"] = r.completed_reads;
            out["completed_writes"] = r.completed_writes;
            out["incomplete"] = r.incomplete;
            out["value_mismatches"] = r.value_mismatches;
            out["end_time_ns"] = r.end_time.count();
            const std::vector<RunResult> one{r};
            const auto metrics = aggregate_metrics(one);
            out["pct_slow_reads"] = metrics.pct_slow_reads;
            out["pct_slow_writes"] = metrics.pct_slow_writes;
            out["avg_read_latency"] = fraction(metrics.avg_read_latency);
            out["avg_write_latency"] = fraction(metrics.avg_write_latency);
            return out;
        },
        py::arg("algorithm") = "simple", py::arg("readers") = 2, py::arg("writers") = 2, py::arg("servers") = 5,
        py::arg("f") = 1, py::arg("ops") = 25, py::arg("r_int") = 4.0, py::arg("w_int") = 4.0,
        py::arg("crashes") = false, py::arg("seed") = 1);

    m.def(
        "check_atomicity",
        [](const py::list& history, double skew) {
            const auto events = events_from(history);
            return describe(check_atomicity(events, CheckOptions{seconds(skew)}));
        },
        py::arg("history"), py::arg("skew") = 0.0, "'ok' or a description of the first violation.");

    m.def(
        "averages",
        [](const std::vector<std::pair<std::int64_t, std::uint32_t>>& runs) {
            std::vector<RoleTotals> totals;
            for (const auto& [sum, n] : runs) {
                RoleTotals t;
                t.total_latency = sum;
                t.terminated = n;
                totals.push_back(t);
            }
            return py::make_tuple(fraction(weighted_average(totals)), fraction(nonweighted_average(totals)));
        },
        py::arg("runs"), "(weighted, non-weighted) averages of (total seconds, terminated processes) per run.");

    m.def("smoke_matrix_csv", [](std::uint32_t ops) {
        auto spec = smoke_matrix();
        spec.base.ops_per_client = ops;
        std::vector<MatrixRow> rows;
        {
            py::gil_scoped_release release;
            rows = run_matrix(spec);
        }
        std::ostringstream out;
        write_matrix_csv(out, rows);
        return out.str();
    }, py::arg("ops") = 25);

    m.def("frame_round_trip", [](const std::string& value, std::uint32_t op_seq) {
        ProtocolMessage msg;
        msg.kind = MessageKind::Propagate;
        msg.sender = writer(0);
        msg.op_seq = op_seq;
        msg.tag = Tag{1, 0, op_seq};
        msg.value = value;
        const auto bytes = encode_frame(msg);
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                              decode_frame(bytes) == msg);
    });
}
