"""Python bindings for the mwmr register library."""

from ._mwmr import (
    ProtocolError,
    QuorumSystem,
    averages,
    build_majority_system,
    check_atomicity,
    exact_predicate,
    frame_round_trip,
    greedy_predicate,
    majority_degree,
    read_bound,
    run_scenario,
    smoke_matrix_csv,
    verify_intersection_degree,
    write_bound,
)

__all__ = [
    "ProtocolError",
    "QuorumSystem",
    "averages",
    "build_majority_system",
    "check_atomicity",
    "exact_predicate",
    "frame_round_trip",
    "greedy_predicate",
    "majority_degree",
    "read_bound",
    "run_scenario",
    "smoke_matrix_csv",
    "verify_intersection_degree",
    "write_bound",
]
