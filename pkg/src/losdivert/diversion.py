"""Facility choice at the moment a patient decides to travel.

Three policies: stay at the assigned facility, go where the predicted LOS is
smallest, or go where the LOS realized in a cloned lookahead simulation is
smallest (a comparator only a simulation modeller can run).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "POLICIES",
    "DiversionDecision",
    "choose_min",
    "predict_candidates",
    "decide_none",
    "decide_predicted",
    "decide_oracle",
]

POLICIES = ("none", "predicted", "oracle")


@dataclass(frozen=True)
class DiversionDecision:
    patient_id: int
    time: float
    assigned: int
    chosen: int
    travel_times: tuple[float, ...]
    candidate_los: tuple[float, ...] | None

    @property
    def diverted(self) -> bool:
        return self.chosen != self.assigned


def choose_min(values: Sequence[float], assigned: int) -> int:
    """Index of the smallest value; ties go to ``assigned``, then to the lowest index."""
    best = min(values)
    if values[assigned] == best:
        return assigned
    return next(i for i, v in enumerate(values) if v == best)


def predict_candidates(snapshots, travel_times, predictors,
                       diagnostics: Counter | None = None) -> tuple[float, ...]:
    return tuple(
        pred.total_los(snap, delta, diagnostics)
        for snap, delta, pred in zip(snapshots, travel_times, predictors)
    )


def decide_none(patient, time: float = 0.0, travel_times=()) -> DiversionDecision:
    return DiversionDecision(patient.id, time, patient.origin, patient.origin,
                             tuple(travel_times), None)


def decide_predicted(patient, snapshots, travel_times, predictors,
                     diagnostics: Counter | None = None) -> DiversionDecision:
    """Send the patient where the predicted LOS at their arrival time is smallest."""
    los = predict_candidates(snapshots, travel_times, predictors, diagnostics)
    chosen = choose_min(los, patient.origin)
    time = snapshots[0].time if snapshots else patient.decision_time
    return DiversionDecision(patient.id, time, patient.origin, chosen, tuple(travel_times), los)


def decide_oracle(sim, patient, candidates: Sequence[int] | None = None) -> DiversionDecision:
    """Send the patient where a cloned-state lookahead says their LOS is smallest.

    ``sim`` must offer ``lookahead_los(patient, facility)``; each call runs
    on a private copy of the whole simulation state, so the mainline and its
    random streams are untouched.
    """
    travel = tuple(sim.travel[patient.origin])
    if candidates is None:
        candidates = range(len(travel))
    candidates = list(candidates)
    los = [sim.lookahead_los(patient, j) for j in candidates]
    if patient.origin in candidates:
        pick = choose_min(los, candidates.index(patient.origin))
    else:
        pick = choose_min(los, 0)
    full = [float("inf")] * len(travel)
    for j, v in zip(candidates, los):
        full[j] = v
    return DiversionDecision(patient.id, sim.calendar.now, patient.origin, candidates[pick],
                             travel, tuple(full))
