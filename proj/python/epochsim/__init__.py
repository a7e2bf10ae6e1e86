"""Epoch-synchronized parallel discrete event simulation with the PHOLD benchmark."""

from ._core import (
    ConfigError,
    Error,
    LookaheadViolation,
    available_cpus,
    compare_traces,
    detect_topology,
    epoch_of,
    partition_objects,
    phold_oracle,
    phold_realloc_count,
    phold_touch_count,
    run_cli,
    run_phold,
    verify_trace,
)

__all__ = [
    "ConfigError",
    "Error",
    "LookaheadViolation",
    "available_cpus",
    "compare_traces",
    "detect_topology",
    "epoch_of",
    "partition_objects",
    "phold_oracle",
    "phold_realloc_count",
    "phold_touch_count",
    "run_cli",
    "run_phold",
    "verify_trace",
]
