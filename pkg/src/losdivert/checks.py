"""Self-checks behind ``losdivert validate``: analytic queueing results and
numerical properties the simulator and predictor must satisfy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FacilityConfig, ScenarioConfig, parse_config
from .distributions import RngStream, TruncatedNormal
from .engine import COMPLETE, EventCalendar, Subsystem
from .facility import SUBSYSTEMS, Patient
from .metrics import ReplicationRecorder
from .predictor import remaining_time_approx, remaining_time_exact
from .simulation import Simulation

__all__ = [
    "CheckResult",
    "pk_mean_wait",
    "simulate_mg1",
    "check_pollaczek_khinchine",
    "check_littles_law",
    "check_quantile_roundtrip",
    "residual_gap_table",
    "check_residual_gap",
    "reference_distributions",
    "run_all",
]

PK_SERVICE = TruncatedNormal(3.451, 0.873)
PK_RATE = 0.2


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    table: tuple = ()  # preformatted lines printed under the verdict

    def __str__(self):
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"
        return "\n".join((head, *("    " + line for line in self.table)))


def reference_distributions() -> dict:
    """Station name -> service distribution of the bundled scenarios."""
    return dict(parse_config("table1.cfg").facilities[0].service)


def pk_mean_wait(dist, rate: float) -> float:
    """Steady-state mean wait in queue of an M/G/1 station."""
    rho = rate * dist.mean()
    if rho >= 1:
        raise ValueError(f"unstable station: rho = {rho:.4f}")
    return rate * dist.second_moment() / (2.0 * (1.0 - rho))


def simulate_mg1(dist, rate: float, customers: int, seed: int = 1) -> float:
    """Mean wait in queue over ``customers`` Poisson arrivals to one station,
    run on the same calendar and station classes as the full model."""
    calendar = EventCalendar()
    arrivals = RngStream(seed, "mg1.arrivals")
    station = Subsystem("mg1", dist, RngStream(seed, "mg1.service"))
    calendar.schedule(arrivals.expovariate(rate), "arrive")
    generated = 0
    while calendar:
        kind, _, _ = calendar.pop()
        now = calendar.now
        if kind == COMPLETE:
            station.complete_service(now, calendar)
            continue
        p = Patient(generated, 0, False, False, now)
        generated += 1
        if generated < customers:
            calendar.schedule(now + arrivals.expovariate(rate), "arrive")
        station.enter(p, now, calendar)
    return station.waits.mean


def check_pollaczek_khinchine(customers: int = 1_000_000, tol: float = 0.03,
                              seed: int = 7) -> CheckResult:
    expected = pk_mean_wait(PK_SERVICE, PK_RATE)
    got = simulate_mg1(PK_SERVICE, PK_RATE, customers, seed)
    rel = abs(got - expected) / expected
    return CheckResult(
        "M/G/1 mean wait vs Pollaczek-Khinchine", rel <= tol,
        f"simulated {got:.4f}, analytic {expected:.4f}, rel. error {rel:.4f} "
        f"(tol {tol}, {customers} customers)")


def _stable_config(days: int) -> ScenarioConfig:
    base = parse_config("table1.cfg")
    stable = next(f for f in base.facilities if f.interarrival == 9.0)
    fac = FacilityConfig("stable", 9.0, stable.service, stable.p_ncd, stable.p_lab)
    return base.replace(facilities=(fac,), travel=((10.0,),), policies=("none",),
                        replications=1, horizon_days=days, warmup_days=0)


def check_littles_law(days: int = 200, tol: float = 0.02, seed: int = 11) -> CheckResult:
    """Time-average queue length against arrival rate times mean wait, per station."""
    cfg = _stable_config(days)
    rec = ReplicationRecorder()
    sim = Simulation(cfg, "none", seed, recorder=rec, record_predictions=False)
    sim.run(days)
    horizon = sum(d.length for d in rec.days if d.subsystem == SUBSYSTEMS[0])
    lines, worst = [], 0.0
    for s in SUBSYSTEMS:
        rows = [d for d in rec.days if d.subsystem == s]
        area = sum(d.queue_integral for d in rows)
        entered = sum(d.entered for d in rows)
        waits = sum(d.wait_sum for d in rows)
        count = sum(d.wait_count for d in rows)
        lq = area / horizon
        lam_w = (entered / horizon) * (waits / count)
        rel = abs(lq - lam_w) / lam_w if lam_w > 0 else abs(lq)
        worst = max(worst, rel)
        lines.append(f"{s:<9} L_q={lq:.5f}  lambda*W_q={lam_w:.5f}  rel={rel:.2e}")
    return CheckResult("Little's law per station (interarrival 9)", worst <= tol,
                       f"worst rel. error {worst:.2e} (tol {tol}, {days} days)", tuple(lines))


def check_quantile_roundtrip(tol: float = 1e-9) -> CheckResult:
    grid = np.linspace(0.01, 0.99, 99)
    worst, lines = 0.0, []
    for name, dist in reference_distributions().items():
        err = max(abs(dist.cdf(dist.quantile(float(p))) - p) for p in grid)
        worst = max(worst, err)
        lines.append(f"{name:<9} {str(dist):<44} max|cdf(q(p)) - p| = {err:.2e}")
    return CheckResult("quantile round-trip", worst < tol,
                       f"worst {worst:.2e} (tol {tol})", tuple(lines))


def residual_gap_table(points: int = 200) -> list[dict]:
    """Mean and max gap between the piecewise and exact remaining-service times
    on a grid over [0, q(0.95)], per reference distribution."""
    rows = []
    for name, dist in reference_distributions().items():
        xs = np.linspace(0.0, dist.quantile(0.95), points)
        gaps = np.array([abs(remaining_time_approx(dist, float(x)) - remaining_time_exact(dist, float(x)))
                         for x in xs])
        rows.append({"station": name, "dist": str(dist), "mean": dist.mean(),
                     "mean_gap": float(gaps.mean()), "max_gap": float(gaps.max())})
    return rows


def check_residual_gap(points: int = 200) -> CheckResult:
    rows = residual_gap_table(points)
    lines = [f"{'station':<9} {'distribution':<44} {'E[s]':>7} {'mean gap':>9} {'max gap':>9}"]
    lines += [f"{r['station']:<9} {r['dist']:<44} {r['mean']:>7.4f} {r['mean_gap']:>9.4f} "
              f"{r['max_gap']:>9.4f}" for r in rows]
    ok = all(r["mean_gap"] < r["mean"] for r in rows)
    return CheckResult("piecewise vs exact remaining service", ok,
                       "mean gap below E[s] for every distribution" if ok
                       else "mean gap reaches E[s] for some distribution", tuple(lines))


def run_all(customers: int = 1_000_000, pk_tol: float = 0.03, little_tol: float = 0.02,
            little_days: int = 200) -> list[CheckResult]:
    return [
        check_pollaczek_khinchine(customers, pk_tol),
        check_littles_law(little_days, little_tol),
        check_quantile_roundtrip(),
        check_residual_gap(),
    ]
