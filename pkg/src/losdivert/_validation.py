"""Input validation helpers shared by the estimators and the scenario loader."""

from __future__ import annotations

import math
from collections.abc import Mapping

from .distributions import ServiceDistribution

__all__ = [
    "check_probability",
    "check_nonnegative",
    "check_positive",
    "check_service_map",
    "check_snapshot",
]


def check_probability(p, name="p", open_interval=True) -> float:
    p = float(p)
    ok = 0.0 < p < 1.0 if open_interval else 0.0 <= p <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {bounds}, got {p!r}")
    return p


def check_nonnegative(value, name="value") -> float:
    value = float(value)
    if not (value >= 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a finite number >= 0, got {value!r}")
    return value


def check_positive(value, name="value") -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a finite number > 0, got {value!r}")
    return value


def check_service_map(service, order) -> dict:
    if not isinstance(service, Mapping):
        raise TypeError(f"expected a mapping of subsystem -> distribution, got {type(service).__name__}")
    missing = [s for s in order if s not in service]
    if missing:
        raise ValueError(f"service distributions missing for {missing}")
    for name in order:
        if not isinstance(service[name], ServiceDistribution):
            raise TypeError(f"{name}: not a ServiceDistribution: {service[name]!r}")
    return {name: service[name] for name in order}


def check_snapshot(snapshot, order):
    missing = [s for s in order if s not in snapshot.subsystems]
    if missing:
        raise ValueError(f"snapshot lacks subsystems {missing}")
    for name in order:
        state = snapshot.subsystems[name]
        if state.queue_length < 0 or int(state.queue_length) != state.queue_length:
            raise ValueError(f"{name}: queue length must be a non-negative integer")
        if state.elapsed is not None:
            check_nonnegative(state.elapsed, f"{name} elapsed service time")
    check_nonnegative(snapshot.arrival_rate, "arrival rate")
    return snapshot
