"""One replication: a network of facilities run through independent daily
outpatient sessions, with a diversion decision for every generated patient."""

from __future__ import annotations

from collections import Counter

from .diversion import POLICIES, decide_none, decide_oracle, decide_predicted, predict_candidates
from .distributions import RngStream
from .engine import COMPLETE, EventCalendar, SimulationError
from .facility import Facility, Patient, first_subsystem, route_after
from .predictor import LosPredictor

__all__ = ["Simulation", "GENERATE", "ARRIVE", "LOOKAHEAD_HORIZON"]

GENERATE = "generate"
ARRIVE = "arrive"
LOOKAHEAD_HORIZON = 1e4


class Simulation:
    """Mutable state of one replication.

    Parameters
    ----------
    config : ScenarioConfig
    policy : str
        ``none``, ``predicted`` or ``oracle``.
    seed : int
        Replication seed; every random stream is derived from it by label.
    recorder : object, optional
        Receives ``patient_exit(patient)`` and ``end_day(sim)`` calls.
    trace : callable, optional
        Called with one text line per event.
    lookahead_policy : str
        Policy followed by patients generated inside an oracle lookahead.
    record_predictions : bool
        Compute predicted LOS for every candidate even when the policy does
        not need it (for error statistics).
    """

    def __init__(self, config, policy="none", seed=0, recorder=None, trace=None,
                 lookahead_policy="predicted", record_predictions=True):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if lookahead_policy not in ("none", "predicted"):
            raise ValueError("lookahead_policy must be 'none' or 'predicted'")
        self.config = config
        self.policy = policy
        self.seed = seed
        self.recorder = recorder
        self.trace = trace
        self.lookahead_policy = lookahead_policy
        self.record_predictions = record_predictions
        self.arrival_window = float(config.arrival_minutes)
        self.travel = [tuple(float(d) for d in row) for row in config.travel]
        self.facilities = [
            Facility(i, f.name, f.interarrival, f.service,
                     lambda label: RngStream(seed, label),
                     f.p_ncd, f.p_lab, config.rate_window)
            for i, f in enumerate(config.facilities)
        ]
        self.predictors = [LosPredictor().fit(f.service) for f in config.facilities]
        self.calendar = EventCalendar()
        self.day = -1
        self.next_id = 0
        self.diagnostics = Counter()
        self._target = None
        self._target_done = False

    # -- event loop -------------------------------------------------------

    def start_day(self, day: int) -> None:
        self.day = day
        self.calendar = EventCalendar(0.0)
        for fac in self.facilities:
            fac.reset_day(0.0)
        for fac in self.facilities:
            first = fac.next_interarrival()
            if first < self.arrival_window:
                self.calendar.schedule(first, GENERATE, fac)

    def step(self) -> None:
        kind, target, patient = self.calendar.pop()
        if kind == COMPLETE:
            self._on_complete(target)
        elif kind == ARRIVE:
            self._on_arrive(target, patient)
        elif kind == GENERATE:
            self._on_generate(target)
        else:
            raise SimulationError(f"unknown event kind {kind!r}")

    def run_day(self, day: int) -> None:
        """Simulate one day: arrivals in [0, arrival_window), then drain."""
        self.start_day(day)
        while self.calendar:
            self.step()
        for fac in self.facilities:
            if not fac.empty:
                raise SimulationError(f"day {day}: {fac.name} did not drain")
        if self.recorder is not None:
            self.recorder.end_day(self)

    def run(self, days: int) -> None:
        for day in range(days):
            self.run_day(day)

    def _log(self, kind, fac, sub, pid):
        self.trace(f"{self.day}\t{self.calendar.now:.9f}\t{fac}\t{sub}\t{kind}\t{pid}")

    def _on_generate(self, fac: Facility) -> None:
        now = self.calendar.now
        patient = fac.new_patient(self.next_id, now, self.day)
        self.next_id += 1
        nxt = now + fac.next_interarrival()
        if nxt < self.arrival_window:
            self.calendar.schedule(nxt, GENERATE, fac)
        if self.trace is not None:
            self._log(GENERATE, fac.name, "-", patient.id)
        decision = self.decide(patient)
        patient.chosen = decision.chosen
        patient.travel = decision.travel_times
        dest = self.facilities[decision.chosen]
        self.calendar.schedule(now + patient.travel[decision.chosen], ARRIVE, dest, patient)
        if self.trace is not None:
            self._log("decide", dest.name, "-", patient.id)

    def _on_arrive(self, fac: Facility, patient) -> None:
        now = self.calendar.now
        patient.arrival_time = now
        fac.record_arrival(now)
        if self.trace is not None:
            self._log(ARRIVE, fac.name, "-", patient.id)
        fac.subsystems[first_subsystem(patient)].enter(patient, now, self.calendar)

    def _on_complete(self, sub) -> None:
        now = self.calendar.now
        patient = sub.complete_service(now, self.calendar)
        fac = self.facilities[sub.facility]
        if self.trace is not None:
            self._log(COMPLETE, fac.name, sub.name, patient.id)
        nxt = route_after(sub.name, patient)
        if nxt is not None:
            fac.subsystems[nxt].enter(patient, now, self.calendar)
            return
        patient.exit_time = now
        if self.trace is not None:
            self._log("exit", fac.name, "-", patient.id)
        if self.recorder is not None:
            self.recorder.patient_exit(patient)
        if patient.id == self._target:
            self._target_done = True

    # -- decisions --------------------------------------------------------

    def snapshots(self):
        now = self.calendar.now
        return [fac.snapshot(now) for fac in self.facilities]

    def decide(self, patient):
        travel = self.travel[patient.origin]
        now = self.calendar.now
        if self.policy == "predicted":
            decision = decide_predicted(patient, self.snapshots(), travel, self.predictors,
                                        self.diagnostics)
            patient.predicted_los = list(decision.candidate_los)
            return decision
        if self.record_predictions:
            patient.predicted_los = list(
                predict_candidates(self.snapshots(), travel, self.predictors, self.diagnostics))
        if self.policy == "none":
            return decide_none(patient, now, travel)
        decision = decide_oracle(self, patient)
        patient.oracle_los = list(decision.candidate_los)
        return decision

    # -- lookahead --------------------------------------------------------

    def clone(self) -> "Simulation":
        """Independent copy of the state (streams included), detached from the
        recorder, the trace and the diagnostics counter."""
        new = Simulation.__new__(Simulation)
        new.__dict__.update(self.__dict__)
        new.recorder = None
        new.trace = None
        new.diagnostics = Counter()
        patients = {}
        facilities = []
        subsystems = {}

        def remap(obj):
            if obj is None:
                return None
            twin = patients.get(id(obj)) or subsystems.get(id(obj))
            if twin is not None:
                return twin
            if isinstance(obj, Facility):
                return facilities[obj.index]
            if isinstance(obj, Patient):
                twin = patients[id(obj)] = obj.clone()
                return twin
            raise SimulationError(f"cannot clone event target {obj!r}")

        for fac in self.facilities:
            twin = fac.clone(remap)
            facilities.append(twin)
            for name, sub in fac.subsystems.items():
                subsystems[id(sub)] = twin.subsystems[name]
        new.facilities = facilities
        new.calendar = self.calendar.clone(remap)
        return new

    def lookahead_los(self, patient, facility: int, horizon: float = LOOKAHEAD_HORIZON) -> float:
        """LOS the patient would realize at ``facility``, found by running a clone."""
        twin_sim = self.clone()
        twin_sim.policy = self.lookahead_policy
        twin_sim.record_predictions = False
        twin = patient.copy_for_lookahead()
        twin.chosen = facility
        now = self.calendar.now
        cal = twin_sim.calendar
        cal.schedule(now + self.travel[patient.origin][facility], ARRIVE,
                     twin_sim.facilities[facility], twin)
        twin_sim._target = patient.id
        limit = now + horizon
        while not twin_sim._target_done:
            if not cal or cal.peek_time() > limit:
                raise SimulationError(
                    f"lookahead for patient {patient.id} exceeded {horizon} minutes")
            twin_sim.step()
        return twin.realized_los
