import pytest

from losdivert.diversion import decide_oracle
from losdivert.engine import SimulationError
from losdivert.metrics import ReplicationRecorder
from losdivert.simulation import Simulation


def _trace(cfg, policy, seed=5, days=2, sim_cls=Simulation, **kw):
    lines = []
    sim = sim_cls(cfg, policy, seed, trace=lines.append, **kw)
    sim.run(days)
    return lines


class PeekingSimulation(Simulation):
    """Runs every oracle lookahead but keeps patients at home."""

    def decide(self, patient):
        decide_oracle(self, patient)
        self.snapshots()
        return super().decide(patient)


def test_same_seed_same_trace(table1):
    assert _trace(table1, "predicted") == _trace(table1, "predicted")
    assert _trace(table1, "none", seed=5) != _trace(table1, "none", seed=6)


def test_snapshots_do_not_perturb_trace(table1):
    quiet = _trace(table1, "none", record_predictions=False)
    assert quiet == _trace(table1, "none", record_predictions=True)


def test_lookaheads_do_not_perturb_trace(table1):
    cfg = table1.replace(arrival_window=240.0)
    assert _trace(cfg, "none", days=1) == _trace(cfg, "none", days=1, sim_cls=PeekingSimulation)


def test_arrival_stream_shared_across_policies(table1):
    # common random numbers: who is generated, where and when, never depends on the policy
    def generated(policy):
        return [ln for ln in _trace(table1, policy) if "\tgenerate\t" in ln]
    assert generated("none") == generated("predicted")


def test_trace_format(table1):
    line = _trace(table1, "none", days=1)[0]
    day, t, fac, sub, kind, pid = line.split("\t")
    assert (day, sub, kind, pid) == ("0", "-", "generate", "0")
    assert fac in table1.names
    assert len(t.split(".")[1]) == 9


def test_patients_stay_home_without_diversion(table1):
    rec = ReplicationRecorder()
    Simulation(table1, "none", 3, recorder=rec).run(2)
    assert rec.patients and all(p.origin == p.chosen for p in rec.patients)


def test_unknown_policy(table1):
    with pytest.raises(ValueError):
        Simulation(table1, "random")
    with pytest.raises(ValueError):
        Simulation(table1, "none", lookahead_policy="oracle")


def test_lookahead_horizon_guard(table1):
    sim = Simulation(table1, "none", 1)
    sim.start_day(0)
    while sim.calendar.peek_time() < 200:
        sim.step()
    from losdivert.facility import Patient
    with pytest.raises(SimulationError):
        sim.lookahead_los(Patient(10**6, 1, True, True, sim.calendar.now), 1, horizon=1.0)
