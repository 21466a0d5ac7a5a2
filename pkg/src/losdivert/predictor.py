"""Real-time length-of-stay prediction from a frozen facility snapshot.

The pipeline, per station: expected remaining service of the patient in
service (a quantile-based piecewise rule), queue length extrapolated to the
patient's arrival time, delay, and station LOS. Stations are chained so each
prediction is made at the moment the previous predicted stay ends.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_nonnegative,
    check_probability,
    check_service_map,
    check_snapshot,
)
from .distributions import TAIL_QUANTILE, ServiceDistribution
from .facility import SUBSYSTEMS, FacilitySnapshot, SubsystemState

__all__ = [
    "ResidualRule",
    "DEFAULT_RULE",
    "LosPrediction",
    "remaining_time_approx",
    "remaining_time_exact",
    "delay_now",
    "queue_length_at",
    "residual_at",
    "los_subsystem_at",
    "predict_total_los",
    "ResidualTimeEstimator",
    "LosPredictor",
]


@dataclass(frozen=True)
class ResidualRule:
    """Quantile levels of the piecewise remaining-service rule."""

    mid: float = 0.5
    high: float = 0.75
    tail: float = TAIL_QUANTILE

    def __post_init__(self):
        for name in ("mid", "high", "tail"):
            check_probability(getattr(self, name), name)
        if not self.mid < self.high < self.tail:
            raise ValueError(f"need mid < high < tail, got {self.mid}, {self.high}, {self.tail}")

    def breakpoints(self, dist: ServiceDistribution) -> tuple[float, float, float]:
        return dist.quantile(self.mid), dist.quantile(self.high), dist.upper_limit(self.tail)


DEFAULT_RULE = ResidualRule()


@dataclass(frozen=True)
class LosPrediction:
    facility: int
    time: float
    travel_time: float
    components: tuple[tuple[str, float], ...]
    total: float

    def __getitem__(self, name: str) -> float:
        return dict(self.components)[name]


def remaining_time_approx(dist: ServiceDistribution, elapsed: float,
                          rule: ResidualRule = DEFAULT_RULE,
                          diagnostics: Counter | None = None) -> float:
    """Approximate expected remaining service given ``elapsed`` minutes of service.

    Beyond the upper limit the estimate is clamped to 0 and counted under
    ``diagnostics["residual_clamped"]``.
    """
    if elapsed < 0:
        raise ValueError(f"elapsed service time must be >= 0, got {elapsed}")
    return _piecewise(elapsed, rule.breakpoints(dist), diagnostics)


def _piecewise(x: float, breakpoints, diagnostics) -> float:
    mid, high, upper = breakpoints
    if x > upper:
        if diagnostics is not None:
            diagnostics["residual_clamped"] += 1
        return 0.0
    if x < mid:
        return mid - x
    if x < high:
        return high - x
    return 0.5 * (upper - x)


def _station_los(queue_length, elapsed, mean, breakpoints, delta, rate, diagnostics) -> float:
    # same composition as los_subsystem_at, on precomputed numbers
    if elapsed is None:
        served = math.floor(max(delta / mean, 0.0))
        later = 0.0
    else:
        residual = _piecewise(elapsed, breakpoints, diagnostics)
        served = math.floor(max((delta - residual) / mean, 0.0))
        if delta < residual:
            later = residual - delta
        else:
            later = _piecewise(math.fmod(delta - residual, mean), breakpoints, diagnostics)
    ahead = max(queue_length + (rate * delta - 1.0) - served, 0.0)
    return ahead * mean + later + mean


def remaining_time_exact(dist: ServiceDistribution, elapsed: float) -> float:
    """E[T - x | T > x] by integrating the conditional survival function."""
    survival_x = 1.0 - dist.cdf(elapsed)
    if survival_x <= 1e-12:
        return 0.0
    lo, hi = dist.support
    start = max(elapsed, lo)
    area, _ = integrate.quad(lambda t: 1.0 - dist.cdf(t), start, hi,
                             epsabs=0.0, epsrel=1e-10, limit=200)
    return (start - elapsed) + area / survival_x


def _residual_now(state: SubsystemState, rule, diagnostics) -> float:
    if state.elapsed is None:
        return 0.0
    return remaining_time_approx(state.dist, state.elapsed, rule, diagnostics)


def delay_now(state: SubsystemState, rule: ResidualRule = DEFAULT_RULE,
              diagnostics: Counter | None = None) -> float:
    """Predicted queueing delay for a patient joining the station right now."""
    return state.queue_length * state.dist.mean() + _residual_now(state, rule, diagnostics)


def queue_length_at(state: SubsystemState, delta: float, rate: float,
                    rule: ResidualRule = DEFAULT_RULE,
                    diagnostics: Counter | None = None) -> float:
    """Expected number ahead of the patient ``delta`` minutes after the snapshot.

    ``rate * delta`` expected arrivals join (less the patient themself) and
    whole services completed after the current one finishes are removed.
    """
    mean = state.dist.mean()
    residual = _residual_now(state, rule, diagnostics)
    expected_arrivals = rate * delta
    served = math.floor(max((delta - residual) / mean, 0.0))
    return max(state.queue_length + (expected_arrivals - 1.0) - served, 0.0)


def residual_at(state: SubsystemState, delta: float, rule: ResidualRule = DEFAULT_RULE,
                diagnostics: Counter | None = None) -> float:
    """Expected remaining service of whoever is in service ``delta`` minutes ahead."""
    if state.elapsed is None:
        return 0.0
    residual = remaining_time_approx(state.dist, state.elapsed, rule, diagnostics)
    if delta < residual:
        return residual - delta
    elapsed_later = math.fmod(delta - residual, state.dist.mean())
    return remaining_time_approx(state.dist, elapsed_later, rule, diagnostics)


def los_subsystem_at(state: SubsystemState, delta: float, rate: float,
                     rule: ResidualRule = DEFAULT_RULE,
                     diagnostics: Counter | None = None) -> float:
    mean = state.dist.mean()
    ahead = queue_length_at(state, delta, rate, rule)  # clamps counted once, below
    delay = ahead * mean + residual_at(state, delta, rule, diagnostics)
    return delay + mean


def predict_total_los(snapshot: FacilitySnapshot, travel_time: float,
                      order=SUBSYSTEMS, rule: ResidualRule = DEFAULT_RULE,
                      diagnostics: Counter | None = None) -> LosPrediction:
    """Total predicted LOS for a patient arriving ``travel_time`` after the snapshot.

    Every station in ``order`` is included, whether or not the patient will
    actually need it, so the total errs high.
    """
    delta = travel_time
    total = 0.0
    parts = []
    for name in order:
        los = los_subsystem_at(snapshot[name], delta, snapshot.arrival_rate, rule, diagnostics)
        parts.append((name, los))
        total += los
        delta += los
    return LosPrediction(snapshot.facility, snapshot.time, travel_time, tuple(parts), total)


class ResidualTimeEstimator(BaseEstimator):
    """Remaining-service predictor for one service distribution.

    ``fit`` takes the distribution and stores its breakpoints; ``predict``
    maps elapsed service times to predicted remaining times.
    """

    def __init__(self, quantiles=(0.5, 0.75), tail_quantile=TAIL_QUANTILE):
        self.quantiles = quantiles
        self.tail_quantile = tail_quantile

    def fit(self, dist: ServiceDistribution, y=None):
        if not isinstance(dist, ServiceDistribution):
            raise TypeError(f"expected a ServiceDistribution, got {type(dist).__name__}")
        mid, high = self.quantiles
        self.rule_ = ResidualRule(mid, high, self.tail_quantile)
        self.dist_ = dist
        self.breakpoints_ = self.rule_.breakpoints(dist)
        return self

    def predict(self, elapsed):
        check_is_fitted(self, "rule_")
        x = np.asarray(elapsed, dtype=float)
        out = [remaining_time_approx(self.dist_, float(v), self.rule_) for v in x.ravel()]
        return np.asarray(out).reshape(x.shape)


class LosPredictor(BaseEstimator):
    """Facility-level LOS predictor.

    Parameters
    ----------
    order : tuple of str
        Stations in visiting order; all of them are counted for every patient.
    quantiles : (float, float)
        Quantile levels bounding the first two pieces of the remaining-service rule.
    tail_quantile : float
        Upper limit used for distributions without bounded support.

    ``fit`` receives the mapping of station name to service distribution.
    """

    def __init__(self, order=SUBSYSTEMS, quantiles=(0.5, 0.75), tail_quantile=TAIL_QUANTILE):
        self.order = order
        self.quantiles = quantiles
        self.tail_quantile = tail_quantile

    def fit(self, service, y=None):
        self.service_ = check_service_map(service, self.order)
        mid, high = self.quantiles
        self.rule_ = ResidualRule(mid, high, self.tail_quantile)
        self.means_ = {name: self.service_[name].mean() for name in self.order}
        self.breakpoints_ = {name: self.rule_.breakpoints(self.service_[name])
                             for name in self.order}
        self._plan = tuple((name, self.means_[name], self.breakpoints_[name])
                           for name in self.order)
        return self

    def total_los(self, snapshot: FacilitySnapshot, travel_time: float,
                  diagnostics: Counter | None = None) -> float:
        """Total predicted LOS as a bare float, skipping validation (hot path)."""
        delta = travel_time
        rate = snapshot.arrival_rate
        states = snapshot.subsystems
        total = 0.0
        for name, mean, bp in self._plan:
            st = states[name]
            los = _station_los(st.queue_length, st.elapsed, mean, bp, delta, rate, diagnostics)
            total += los
            delta += los
        return total

    def _as_fitted(self, snapshot: FacilitySnapshot) -> FacilitySnapshot:
        states = {
            name: SubsystemState(snapshot[name].queue_length, snapshot[name].elapsed,
                                 self.service_[name])
            for name in self.order
        }
        return FacilitySnapshot(snapshot.facility, snapshot.time, snapshot.arrival_rate, states)

    def predict_one(self, snapshot: FacilitySnapshot, travel_time: float,
                    diagnostics: Counter | None = None, validate: bool = True) -> LosPrediction:
        check_is_fitted(self, "rule_")
        if validate:
            check_snapshot(snapshot, self.order)
            check_nonnegative(travel_time, "travel time")
        snap = self._as_fitted(snapshot) if validate else snapshot
        return predict_total_los(snap, travel_time, self.order, self.rule_, diagnostics)

    def predict(self, snapshots, travel_times):
        """Total predicted LOS for each (snapshot, travel time) pair."""
        travel_times = np.broadcast_to(np.asarray(travel_times, dtype=float), (len(snapshots),))
        return np.array([self.predict_one(s, t).total for s, t in zip(snapshots, travel_times)])
