import copy

import pytest

from losdivert.diversion import (
    choose_min,
    decide_none,
    decide_oracle,
    decide_predicted,
    predict_candidates,
)
from losdivert.facility import Patient
from losdivert.simulation import ARRIVE, Simulation


def test_choose_min():
    assert choose_min([30.0, 12.0], 0) == 1
    assert choose_min([12.0, 12.0], 1) == 1
    assert choose_min([12.0, 12.0], 0) == 0
    assert choose_min([5.0, 3.0, 3.0], 0) == 1


def test_decide_none_keeps_assignment():
    d = decide_none(Patient(7, 1, False, False, 3.0), 3.0, (20.0, 10.0))
    assert d.chosen == d.assigned == 1 and not d.diverted


def _mid_day(cfg, policy="none", minutes=200.0, seed=4):
    sim = Simulation(cfg, policy, seed)
    sim.start_day(0)
    while sim.calendar.peek_time() < minutes:
        sim.step()
    return sim


def test_predicted_policy_picks_smaller_prediction(table1):
    sim = _mid_day(table1)
    p = Patient(10_000, 1, True, True, sim.calendar.now)
    snaps = sim.snapshots()
    los = predict_candidates(snaps, sim.travel[1], sim.predictors)
    d = decide_predicted(p, snaps, sim.travel[1], sim.predictors)
    assert d.candidate_los == los
    assert d.chosen == min(range(2), key=lambda j: (los[j], j != 1))
    assert d.diverted == (d.chosen != 1)


def test_predicted_policy_tie_goes_home(table1):
    sim = Simulation(table1, "predicted", 1)
    sim.start_day(0)
    snaps = sim.snapshots()
    equal = (10.0, 10.0)
    for origin in (0, 1):
        p = Patient(1, origin, False, False, 0.0)
        assert decide_predicted(p, snaps, equal, sim.predictors).chosen == origin


def _fingerprint(sim):
    rows = [(sim.calendar.now, len(sim.calendar), sim.next_id)]
    for fac in sim.facilities:
        rows.append((fac.arrival_rng._state, fac.attribute_rng._state, tuple(fac.arrival_times)))
        for sub in fac.subsystems.values():
            ins = None if sub.in_service is None else (sub.in_service[0].id,) + sub.in_service[1:]
            rows.append((sub.rng._state, tuple(p.id for p in sub.queue), ins, sub.busy_time,
                         sub.entered, sub.exited, sub.waits.total, sub.queue_stats.integral))
    rows.append(sorted((at, seq, kind, getattr(pt, "id", None))
                       for at, seq, kind, _, pt in sim.calendar._heap))
    return rows


def test_clone_matches_deepcopy_and_is_independent(table1):
    sim = _mid_day(table1, minutes=250.0)
    twin = sim.clone()
    deep = copy.deepcopy(sim)
    assert _fingerprint(twin) == _fingerprint(sim) == _fingerprint(deep)
    before = _fingerprint(sim)
    for _ in range(500):
        if not twin.calendar:
            break
        twin.step()
        deep.step()
    assert _fingerprint(twin) == _fingerprint(deep)
    assert _fingerprint(sim) == before


def test_oracle_lookahead_leaves_mainline_untouched(table1):
    sim = _mid_day(table1, minutes=300.0)
    before = _fingerprint(sim)
    p = Patient(99_999, 1, True, True, sim.calendar.now)
    p.travel = tuple(sim.travel[1])
    d1 = decide_oracle(sim, p)
    assert _fingerprint(sim) == before
    d2 = decide_oracle(sim, p)
    assert d1 == d2
    assert d1.chosen == min(range(2), key=lambda j: (d1.candidate_los[j], j != 1))
    assert all(v > 0 for v in d1.candidate_los)


def test_lookahead_equals_realized_stay_when_nothing_else_happens(table1):
    # with no further arrivals the clone's future is the mainline's future
    cfg = table1.replace(arrival_window=1e-9, policies=("none",))
    sim = Simulation(cfg, "none", 8)
    sim.start_day(0)
    p = Patient(0, 0, True, True, 0.0)
    sim.next_id = 1
    expected = sim.lookahead_los(p, 1)
    p.chosen = 1
    sim.calendar.schedule(sim.travel[0][1], ARRIVE, sim.facilities[1], p)
    while sim.calendar:
        sim.step()
    assert p.realized_los == pytest.approx(expected, abs=1e-12)


def test_oracle_candidate_subset(table1):
    sim = _mid_day(table1, minutes=100.0)
    p = Patient(5_000, 0, False, True, sim.calendar.now)
    d = decide_oracle(sim, p, candidates=[1])
    assert d.chosen == 1 and d.candidate_los[0] == float("inf")
