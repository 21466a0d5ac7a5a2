"""Outcome statistics, replication protocol and scenario reports."""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .facility import SUBSYSTEMS
from .simulation import Simulation

__all__ = [
    "utilization",
    "disparity",
    "network_disparity",
    "mape",
    "DayRecord",
    "PatientRecord",
    "ReplicationRecorder",
    "ReplicationStats",
    "ScenarioReport",
    "replication_seed",
    "run_replication",
    "run_scenario",
]

SESSION_MINUTES = 360.0


def utilization(busy_minutes: float, session: float = SESSION_MINUTES) -> float:
    """Busy time over the fixed session length; overtime can push it above 1."""
    return busy_minutes / session


def disparity(v1: float, v2: float) -> float:
    """Percentage gap between two facilities' values, relative to the larger one."""
    hi = max(v1, v2)
    if hi <= 0:
        return 0.0
    return abs(v1 - v2) / hi * 100.0


def network_disparity(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    if len(values) < 2:
        return float("nan")
    return disparity(min(values), max(values))


def mape(pairs) -> tuple[float, int]:
    """Mean absolute percentage error over ``(actual, predicted)`` pairs.

    Pairs with a non-positive actual value are skipped; returns
    ``(mape_percent, n_excluded)``.
    """
    errors = []
    excluded = 0
    for actual, predicted in pairs:
        if not actual > 0:
            excluded += 1
            continue
        errors.append(abs((actual - predicted) / actual))
    if not errors:
        return float("nan"), excluded
    return 100.0 * sum(errors) / len(errors), excluded


@dataclass(frozen=True)
class DayRecord:
    day: int
    facility: int
    subsystem: str
    busy: float
    wait_sum: float
    wait_count: int
    queue_integral: float
    entered: int
    length: float


@dataclass(frozen=True)
class PatientRecord:
    day: int
    origin: int
    chosen: int
    los: float
    predicted: float | None
    service: float
    max_wait: float


class ReplicationRecorder:
    def __init__(self):
        self.days: list[DayRecord] = []
        self.patients: list[PatientRecord] = []

    def patient_exit(self, p) -> None:
        predicted = None if p.predicted_los is None else p.predicted_los[p.chosen]
        service = sum(v[3] - v[2] for v in p.visits)
        max_wait = max(v[2] - v[1] for v in p.visits)
        self.patients.append(PatientRecord(p.day, p.origin, p.chosen, p.realized_los,
                                           predicted, service, max_wait))

    def end_day(self, sim) -> None:
        end = max(sim.calendar.now, sim.config.session_minutes)
        for fac in sim.facilities:
            for name, sub in fac.subsystems.items():
                self.days.append(DayRecord(
                    sim.day, fac.index, name, sub.busy_time, sub.waits.total, sub.waits.count,
                    sub.queue_stats.integral, sub.entered, end))


@dataclass
class ReplicationStats:
    """Per-replication outcomes; list entries are indexed by facility."""

    names: list
    rho: list
    wait: list
    los: list
    patients: list
    mape: list
    beta: float
    seed: int = 0
    days: int = 0
    mape_excluded: int = 0
    diagnostics: dict = field(default_factory=dict)

    def outcomes(self) -> dict[str, float]:
        out = {}
        for i, name in enumerate(self.names):
            for s in SUBSYSTEMS:
                out[f"{name}.rho_{s}"] = self.rho[i][s]
            for s in SUBSYSTEMS:
                out[f"{name}.w_{s}"] = self.wait[i][s]
            out[f"{name}.los"] = self.los[i]
            out[f"{name}.mape"] = self.mape[i]
            out[f"{name}.patients"] = float(self.patients[i])
        for s in SUBSYSTEMS:
            out[f"delta.rho_{s}"] = network_disparity([r[s] for r in self.rho])
        for s in SUBSYSTEMS:
            out[f"delta.w_{s}"] = network_disparity([w[s] for w in self.wait])
        out["delta.los"] = network_disparity(self.los)
        out["beta"] = self.beta
        return out


def summarize(recorder: ReplicationRecorder, names, warmup_days: int,
              session: float = SESSION_MINUTES, seed: int = 0) -> ReplicationStats:
    """Pool everything recorded on days ``>= warmup_days``."""
    n = len(names)
    days = sorted({d.day for d in recorder.days if d.day >= warmup_days})
    busy = [{s: 0.0 for s in SUBSYSTEMS} for _ in range(n)]
    wsum = [{s: 0.0 for s in SUBSYSTEMS} for _ in range(n)]
    wcnt = [{s: 0 for s in SUBSYSTEMS} for _ in range(n)]
    for d in recorder.days:
        if d.day < warmup_days:
            continue
        busy[d.facility][d.subsystem] += d.busy
        wsum[d.facility][d.subsystem] += d.wait_sum
        wcnt[d.facility][d.subsystem] += d.wait_count
    n_days = len(days)
    rho = [{s: utilization(busy[i][s], session) / n_days if n_days else 0.0 for s in SUBSYSTEMS}
           for i in range(n)]
    wait = [{s: wsum[i][s] / wcnt[i][s] if wcnt[i][s] else 0.0 for s in SUBSYSTEMS}
            for i in range(n)]
    kept = [p for p in recorder.patients if p.day >= warmup_days]
    los, mapes, counts = [], [], []
    excluded = 0
    for i in range(n):
        mine = [p for p in kept if p.chosen == i]
        counts.append(len(mine))
        los.append(statistics.fmean(p.los for p in mine) if mine else float("nan"))
        pairs = [(p.los, p.predicted) for p in mine if p.predicted is not None]
        m, ex = mape(pairs)
        mapes.append(m)
        excluded += ex
    beta = 100.0 * sum(p.origin != p.chosen for p in kept) / len(kept) if kept else 0.0
    return ReplicationStats(list(names), rho, wait, los, counts, mapes, beta, seed, n_days,
                            excluded)


def replication_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def run_replication(cfg, policy: str, index: int, trace=None) -> ReplicationStats:
    seed = replication_seed(cfg.seed, index)
    recorder = ReplicationRecorder()
    sim = Simulation(cfg, policy, seed, recorder=recorder, trace=trace)
    sim.run(cfg.horizon_days)
    stats = summarize(recorder, cfg.names, cfg.warmup_days, cfg.session_minutes, seed)
    stats.diagnostics = dict(sim.diagnostics)
    return stats


def _run_task(args):
    cfg, policy, index = args
    return policy, index, run_replication(cfg, policy, index)


@dataclass
class ScenarioReport:
    """Replication results per policy, plus aggregation and rendering."""

    config_digest: str
    master_seed: int
    horizon_days: int
    warmup_days: int
    names: list
    results: dict  # policy -> list[ReplicationStats] in replication order

    @property
    def policies(self) -> list[str]:
        return list(self.results)

    def outcome_names(self) -> list[str]:
        first = next(iter(self.results.values()))[0]
        return list(first.outcomes())

    def aggregate(self) -> dict[str, dict[str, tuple[float, float]]]:
        """``{policy: {outcome: (mean, sd)}}``; sd uses n - 1 and is 0 for one replication."""
        table = {}
        for policy, reps in self.results.items():
            rows = [r.outcomes() for r in reps]
            table[policy] = {}
            for key in rows[0]:
                vals = [row[key] for row in rows]
                mean = statistics.fmean(vals)
                sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
                table[policy][key] = (mean, sd)
        return table

    def to_csv(self) -> str:
        agg = self.aggregate()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["outcome"]
        for p in self.policies:
            header += [f"{p}_mean", f"{p}_sd"]
        w.writerow(header)
        for key in self.outcome_names():
            row = [key]
            for p in self.policies:
                mean, sd = agg[p][key]
                row += [f"{mean:.6f}", f"{sd:.6f}"]
            w.writerow(row)
        return buf.getvalue()

    def summary(self) -> str:
        agg = self.aggregate()
        lines = [
            f"config {self.config_digest}  seed {self.master_seed}  "
            f"horizon {self.horizon_days} d  warm-up {self.warmup_days} d  "
            f"replications {len(next(iter(self.results.values())))}",
            "",
        ]
        for p in self.policies:
            lines.append(f"Facility outcomes, policy = {p}  (mean (sd))")
            lines.append(f"{'outcome':<14}" + "".join(f"{n:>22}" for n in self.names))
            for metric in [f"rho_{s}" for s in SUBSYSTEMS] + [f"w_{s}" for s in SUBSYSTEMS] + ["los", "mape"]:
                cells = "".join(_cell(*agg[p][f"{n}.{metric}"]) for n in self.names)
                lines.append(f"{metric:<14}{cells}")
            lines.append("")
        lines.append("Disparity between facilities (%), mean (sd)")
        lines.append(f"{'outcome':<14}" + "".join(f"{p:>22}" for p in self.policies))
        for metric in [f"rho_{s}" for s in SUBSYSTEMS] + [f"w_{s}" for s in SUBSYSTEMS] + ["los"]:
            cells = "".join(_cell(*agg[p][f"delta.{metric}"]) for p in self.policies)
            lines.append(f"{'D_' + metric:<14}{cells}")
        lines.append(f"{'beta':<14}" + "".join(_cell(*agg[p]["beta"]) for p in self.policies))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "report.csv")
        txt_path = os.path.join(out_dir, "summary.txt")
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.to_csv())
        with open(txt_path, "w") as fh:
            fh.write(self.summary())
        return csv_path, txt_path


def _cell(mean: float, sd: float) -> str:
    return f"{mean:>12.3f} ({sd:.3f})".rjust(22)


def run_scenario(cfg, policies=None, jobs: int | None = 1, trace=None) -> ScenarioReport:
    """Run every replication of every policy and collect a report.

    Replications share seeds across policies (common random numbers). With
    ``jobs > 1`` replications run in worker processes; results are joined in
    replication order so the report does not depend on scheduling.
    ``trace`` (a callable) receives the event trace of replication 0 of each
    policy, each line prefixed with the policy name.
    """
    cfg.validate()
    policies = list(policies or cfg.policies)
    tasks = [(cfg, p, i) for p in policies for i in range(cfg.replications)]
    results = {p: [None] * cfg.replications for p in policies}
    if trace is not None:
        for p in policies:
            results[p][0] = run_replication(cfg, p, 0, trace=lambda line, p=p: trace(f"{p}\t{line}"))
        tasks = [t for t in tasks if t[2] != 0]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for policy, i, stats in pool.map(_run_task, tasks):
                results[policy][i] = stats
    else:
        for task in tasks:
            policy, i, stats = _run_task(task)
            results[policy][i] = stats
    return ScenarioReport(cfg.digest(), cfg.seed, cfg.horizon_days, cfg.warmup_days,
                          cfg.names, results)
