from fractions import Fraction

import pytest

import mwmr


def test_table_rows():
    for servers, f, count, degree in [(10, 1, 10, 9), (15, 2, 105, 6), (25, 2, 300, 11)]:
        qs = mwmr.build_majority_system(servers, f)
        assert len(qs) == count
        assert qs.degree == degree
        assert all(len(q) == servers - f for q in qs.quorums())


def test_invalid_system():
    with pytest.raises(ValueError):
        mwmr.build_majority_system(5, 3)


def test_predicates():
    qs = mwmr.build_majority_system(5, 1)
    full = qs.quorum(0)
    assert mwmr.exact_predicate(qs, 0, full, 0) == []
    assert mwmr.exact_predicate(qs, 0, full[:1], 0) is None
    # Greedy never accepts what the exact search rejects.
    for k in range(3):
        for size in range(len(full) + 1):
            ms = full[:size]
            if mwmr.greedy_predicate(qs, 0, ms, k) is not None:
                assert mwmr.exact_predicate(qs, 0, ms, k) is not None


def test_scenario_is_atomic_and_replays():
    a = mwmr.run_scenario("cwfr", servers=10, ops=10, seed=3)
    b = mwmr.run_scenario("cwfr", servers=10, ops=10, seed=3)
    assert a["history"] == b["history"]
    assert a["completed_reads"] == 20
    assert not a["incomplete"]
    assert mwmr.check_atomicity(a["history"]) == "ok"
    assert isinstance(a["avg_read_latency"], Fraction)


def test_simple_is_always_slow():
    r = mwmr.run_scenario("simple", ops=5)
    assert r["pct_slow_reads"] == 100.0
    assert r["pct_slow_writes"] == 100.0


def test_checker_rejects_stale_read():
    def op(role, index, seq, kind, t, tag):
        return {"role": role, "index": index, "op_seq": seq, "kind": kind, "time_ns": t, "tag": tag, "rounds": 2}

    h = [
        op("writer", 0, 1, "write_invoke", 0, (0, 0, 0)),
        op("writer", 0, 1, "write_respond", 10, (1, 0, 1)),
        op("writer", 1, 1, "write_invoke", 20, (0, 0, 0)),
        op("writer", 1, 1, "write_respond", 30, (2, 1, 1)),
        op("reader", 0, 1, "read_invoke", 40, (0, 0, 0)),
        op("reader", 0, 1, "read_respond", 50, (1, 0, 1)),
    ]
    assert mwmr.check_atomicity(h).startswith("C3")
    assert mwmr.check_atomicity(h, skew=25e-9) == "ok"


def test_weighted_average():
    weighted, nonweighted = mwmr.averages([(100, 10), (120, 15)])
    assert weighted == Fraction(44, 5)
    assert nonweighted == Fraction(9)
    assert mwmr.averages([(0, 0)]) == (None, None)


def test_smoke_matrix_is_deterministic():
    assert mwmr.smoke_matrix_csv(5) == mwmr.smoke_matrix_csv(5)


def test_frame_round_trip():
    frame, ok = mwmr.frame_round_trip("hello", 7)
    assert ok
    assert int.from_bytes(frame[:4], "big") == len(frame) - 4
