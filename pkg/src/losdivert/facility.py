"""Outpatient facility: four single-server stations in series with optional
NCD and laboratory visits, and frozen state snapshots for the predictor."""

from __future__ import annotations

import copy
from bisect import bisect_left
from dataclasses import dataclass, field

from .engine import SimulationError, Subsystem

__all__ = [
    "SUBSYSTEMS",
    "PATHWAYS",
    "Patient",
    "Facility",
    "SubsystemState",
    "FacilitySnapshot",
    "first_subsystem",
    "route_after",
]

SUBSYSTEMS = ("ncd", "doc", "lab", "pharmacy")

PATHWAYS = (
    ("ncd", "doc", "lab", "pharmacy"),
    ("ncd", "doc", "pharmacy"),
    ("doc", "lab", "pharmacy"),
    ("doc", "pharmacy"),
)


class Patient:
    def __init__(self, id: int, origin: int, needs_ncd: bool, needs_lab: bool,
                 decision_time: float, day: int = 0):
        self.id = id
        self.origin = origin
        self.needs_ncd = needs_ncd
        self.needs_lab = needs_lab
        self.decision_time = decision_time
        self.day = day
        self.chosen: int | None = None
        self.travel: tuple[float, ...] = ()
        self.predicted_los: list[float] | None = None
        self.oracle_los: list[float] | None = None
        self.arrival_time: float | None = None
        self.exit_time: float | None = None
        self.visits: list[list] = []

    def __repr__(self):
        return f"Patient(id={self.id}, origin={self.origin}, chosen={self.chosen})"

    @property
    def diverted(self) -> bool:
        return self.chosen is not None and self.chosen != self.origin

    @property
    def path(self) -> tuple[str, ...]:
        return tuple(v[0] for v in self.visits)

    @property
    def realized_los(self) -> float | None:
        if self.exit_time is None:
            return None
        return self.exit_time - self.arrival_time

    def clone(self) -> "Patient":
        twin = Patient.__new__(Patient)
        twin.__dict__.update(self.__dict__)
        twin.visits = [list(v) for v in self.visits]
        if self.predicted_los is not None:
            twin.predicted_los = list(self.predicted_los)
        if self.oracle_los is not None:
            twin.oracle_los = list(self.oracle_los)
        return twin

    def copy_for_lookahead(self) -> "Patient":
        twin = Patient(self.id, self.origin, self.needs_ncd, self.needs_lab,
                       self.decision_time, self.day)
        twin.travel = self.travel
        return twin


def first_subsystem(patient: Patient) -> str:
    return "ncd" if patient.needs_ncd else "doc"


def route_after(name: str, patient: Patient) -> str | None:
    """Next station after finishing service at ``name``; ``None`` means exit."""
    if name == "ncd":
        return "doc"
    if name == "doc":
        return "lab" if patient.needs_lab else "pharmacy"
    if name == "lab":
        return "pharmacy"
    if name == "pharmacy":
        return None
    raise SimulationError(f"unknown subsystem {name!r}")


@dataclass(frozen=True)
class SubsystemState:
    queue_length: int
    elapsed: float | None  # None when the server is idle
    dist: object

    @property
    def mean_service(self) -> float:
        return self.dist.mean()


@dataclass(frozen=True)
class FacilitySnapshot:
    facility: int
    time: float
    arrival_rate: float
    subsystems: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> SubsystemState:
        return self.subsystems[name]


class Facility:
    """One outpatient facility with its own arrival and service streams."""

    def __init__(self, index: int, name: str, interarrival: float, service: dict,
                 streams, p_ncd: float = 0.5, p_lab: float = 0.5, rate_window: float = 60.0):
        self.index = index
        self.name = name
        self.interarrival = interarrival
        self.p_ncd = p_ncd
        self.p_lab = p_lab
        self.rate_window = rate_window
        self.service = dict(service)
        self.arrival_rng = streams(f"{name}.arrivals")
        self.attribute_rng = streams(f"{name}.attributes")
        self.subsystems = {
            s: Subsystem(s, service[s], streams(f"{name}.{s}.service"), index)
            for s in SUBSYSTEMS
        }
        self.arrival_times: list[float] = []
        self.day_start = 0.0

    def clone(self, remap) -> "Facility":
        new = Facility.__new__(Facility)
        new.__dict__.update(self.__dict__)
        new.arrival_rng = copy.deepcopy(self.arrival_rng)
        new.attribute_rng = copy.deepcopy(self.attribute_rng)
        new.subsystems = {name: sub.clone(remap) for name, sub in self.subsystems.items()}
        new.arrival_times = list(self.arrival_times)
        return new

    def reset_day(self, now: float = 0.0) -> None:
        for sub in self.subsystems.values():
            sub.reset(now)
        self.arrival_times = []
        self.day_start = now

    @property
    def empty(self) -> bool:
        return all(sub.present == 0 for sub in self.subsystems.values())

    def next_interarrival(self) -> float:
        return self.arrival_rng.expovariate(1.0 / self.interarrival)

    def new_patient(self, pid: int, now: float, day: int = 0) -> Patient:
        needs_ncd = self.attribute_rng.bernoulli(self.p_ncd)
        needs_lab = self.attribute_rng.bernoulli(self.p_lab)
        return Patient(pid, self.index, needs_ncd, needs_lab, now, day)

    def record_arrival(self, now: float) -> None:
        self.arrival_times.append(now)

    def arrival_rate(self, now: float) -> float:
        """Observed arrivals per minute over the trailing rate window."""
        elapsed = now - self.day_start
        if elapsed <= 0:
            return 0.0
        window = min(self.rate_window, elapsed)
        lo = bisect_left(self.arrival_times, now - window)
        hi = len(self.arrival_times)
        return (hi - lo) / window

    def snapshot(self, now: float) -> FacilitySnapshot:
        states = {}
        for name, sub in self.subsystems.items():
            elapsed = None if sub.in_service is None else now - sub.in_service[1]
            states[name] = SubsystemState(len(sub.queue), elapsed, sub.dist)
        return FacilitySnapshot(self.index, now, self.arrival_rate(now), states)
