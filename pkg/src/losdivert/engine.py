"""Minimal discrete-event machinery: event calendar, single-server FIFO station,
and running statistics."""

from __future__ import annotations

import copy
import heapq
import math
from collections import deque

__all__ = ["SimulationError", "EventCalendar", "StatAccumulator", "Subsystem", "COMPLETE"]

COMPLETE = "complete"


class SimulationError(RuntimeError):
    """Logic error inside a replication (the replication is aborted)."""


class EventCalendar:
    """Pending events ordered by (time, insertion sequence)."""

    __slots__ = ("now", "_heap", "_seq")

    def __init__(self, start: float = 0.0):
        self.now = start
        self._heap: list = []
        self._seq = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, at: float, kind: str, target=None, patient=None) -> None:
        if at < self.now:
            raise SimulationError(f"cannot schedule {kind!r} at {at} before clock {self.now}")
        heapq.heappush(self._heap, (at, self._seq, kind, target, patient))
        self._seq += 1

    def clone(self, remap) -> "EventCalendar":
        """Copy with every event target and patient passed through ``remap``."""
        new = EventCalendar.__new__(EventCalendar)
        new.now = self.now
        new._seq = self._seq
        # element-wise copy keeps the heap layout
        new._heap = [(at, seq, kind, remap(target), remap(patient))
                     for at, seq, kind, target, patient in self._heap]
        return new

    def peek_time(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def pop(self):
        """Advance the clock to the next event and return ``(kind, target, patient)``."""
        at, _, kind, target, patient = heapq.heappop(self._heap)
        self.now = at
        return kind, target, patient


class StatAccumulator:
    """Count/sum/sum-of-squares of observations plus a time-weighted integral."""

    __slots__ = ("count", "total", "total_sq", "integral", "level", "last_time")

    def __init__(self, start: float = 0.0):
        self.count = 0
        self.total = 0.0
        self.total_sq = 0.0
        self.integral = 0.0
        self.level = 0.0
        self.last_time = start

    def copy(self) -> "StatAccumulator":
        new = StatAccumulator.__new__(StatAccumulator)
        new.count, new.total, new.total_sq = self.count, self.total, self.total_sq
        new.integral, new.level, new.last_time = self.integral, self.level, self.last_time
        return new

    def add(self, value: float) -> None:
        self.count += 1
        self.total += value
        self.total_sq += value * value

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        m = self.total / self.count
        return max((self.total_sq - self.count * m * m) / (self.count - 1), 0.0)

    def set_level(self, level: float, now: float) -> None:
        """Record a step change of the tracked level at time ``now``."""
        self.integral += self.level * (now - self.last_time)
        self.level = level
        self.last_time = now

    def time_average(self, t0: float, t1: float) -> float:
        integral = self.integral + self.level * (t1 - self.last_time)
        return integral / (t1 - t0) if t1 > t0 else 0.0


class Subsystem:
    """Single-server FIFO station with a service-time distribution.

    Each queued or in-service patient carries an open visit record
    ``[name, enqueue, start, end]`` in ``patient.visits``.
    """

    def __init__(self, name: str, dist, rng, facility: int = 0):
        self.name = name
        self.dist = dist
        self.rng = rng
        self.facility = facility
        self.queue: deque = deque()
        self.in_service = None  # (patient, start_time, duration)
        self.reset(0.0)

    def reset(self, now: float) -> None:
        if self.queue or self.in_service is not None:
            raise SimulationError(f"{self.name}: reset while patients are present")
        self.busy_time = 0.0
        self.entered = 0
        self.exited = 0
        self.waits = StatAccumulator(now)
        self.queue_stats = StatAccumulator(now)

    def clone(self, remap) -> "Subsystem":
        new = Subsystem.__new__(Subsystem)
        new.name, new.dist, new.facility = self.name, self.dist, self.facility
        new.rng = copy.deepcopy(self.rng)
        new.queue = deque(remap(p) for p in self.queue)
        if self.in_service is None:
            new.in_service = None
        else:
            p, start, duration = self.in_service
            new.in_service = (remap(p), start, duration)
        new.busy_time, new.entered, new.exited = self.busy_time, self.entered, self.exited
        new.waits = self.waits.copy()
        new.queue_stats = self.queue_stats.copy()
        return new

    @property
    def busy(self) -> bool:
        return self.in_service is not None

    @property
    def present(self) -> int:
        return len(self.queue) + (self.in_service is not None)

    def enter(self, patient, now: float, calendar: EventCalendar) -> None:
        if self.in_service is not None and self.in_service[0] is patient:
            raise SimulationError(f"patient {patient.id} already in service at {self.name}")
        patient.visits.append([self.name, now, None, None])
        self.entered += 1
        if self.in_service is None:
            self._start(patient, now, calendar)
        else:
            self.queue.append(patient)
            self.queue_stats.set_level(len(self.queue), now)

    def _start(self, patient, now: float, calendar: EventCalendar) -> None:
        visit = patient.visits[-1]
        visit[2] = now
        self.waits.add(now - visit[1])
        duration = self.dist.sample(self.rng)
        self.in_service = (patient, now, duration)
        calendar.schedule(now + duration, COMPLETE, self, patient)

    def complete_service(self, now: float, calendar: EventCalendar):
        """Release the patient in service and start the next queued one."""
        if self.in_service is None:
            raise SimulationError(f"{self.name}: completion with an idle server")
        patient, start, duration = self.in_service
        self.in_service = None
        self.busy_time += duration
        patient.visits[-1][3] = now
        self.exited += 1
        if self.queue:
            nxt = self.queue.popleft()
            self.queue_stats.set_level(len(self.queue), now)
            self._start(nxt, now, calendar)
        return patient
