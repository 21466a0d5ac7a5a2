import pytest

from losdivert.distributions import RngStream, Uniform
from losdivert.engine import COMPLETE, EventCalendar, SimulationError, StatAccumulator, Subsystem
from losdivert.facility import Patient


class Fixed(Uniform):
    """Service that always takes the same time (narrow uniform)."""

    def sample(self, rng):
        rng.random()
        return self.a


def _patient(i):
    return Patient(i, 0, False, False, 0.0)


def test_calendar_orders_by_time_then_insertion():
    cal = EventCalendar()
    cal.schedule(5.0, "b")
    cal.schedule(1.0, "a")
    cal.schedule(5.0, "c")
    cal.schedule(3.0, "x")
    kinds = []
    while cal:
        kinds.append(cal.pop()[0])
    assert kinds == ["a", "x", "b", "c"]
    assert cal.now == 5.0


def test_calendar_rejects_past_events():
    cal = EventCalendar()
    cal.schedule(2.0, "a")
    cal.pop()
    with pytest.raises(SimulationError):
        cal.schedule(1.0, "late")


def test_calendar_clone_is_independent():
    cal = EventCalendar()
    for t in (3.0, 1.0, 2.0):
        cal.schedule(t, "e", target=t)
    twin = cal.clone(lambda obj: obj)
    twin.pop()
    twin.schedule(1.5, "new")
    assert len(cal) == 3
    assert [cal.pop()[1] for _ in range(3)] == [1.0, 2.0, 3.0]


def test_station_is_fifo_and_tracks_busy_time():
    cal = EventCalendar()
    station = Subsystem("doc", Fixed(2.0, 2.5), RngStream(0, "s"))
    patients = [_patient(i) for i in range(3)]
    for p in patients:
        station.enter(p, 0.0, cal)
    assert station.present == 3 and station.busy
    order = []
    while cal:
        kind, target, p = cal.pop()
        assert kind == COMPLETE and target is station
        order.append(target.complete_service(cal.now, cal).id)
    assert order == [0, 1, 2]
    assert station.busy_time == pytest.approx(6.0)
    assert cal.now == pytest.approx(6.0)
    assert station.waits.count == 3
    assert station.waits.mean == pytest.approx(2.0)  # waits 0, 2, 4
    # queue length 2 on [0,2), 1 on [2,4)
    assert station.queue_stats.integral == pytest.approx(6.0)
    assert [v[1:] for v in patients[2].visits] == [[0.0, 4.0, 6.0]]


def test_station_reset_refuses_when_occupied():
    cal = EventCalendar()
    station = Subsystem("lab", Uniform(1, 2), RngStream(0, "s"))
    station.enter(_patient(0), 0.0, cal)
    with pytest.raises(SimulationError):
        station.reset(1.0)


def test_completion_on_idle_server_is_an_error():
    station = Subsystem("lab", Uniform(1, 2), RngStream(0, "s"))
    with pytest.raises(SimulationError):
        station.complete_service(0.0, EventCalendar())


def test_stat_accumulator():
    acc = StatAccumulator()
    for v in (1.0, 2.0, 3.0, 4.0):
        acc.add(v)
    assert acc.mean == 2.5
    assert acc.variance == pytest.approx(5 / 3)
    acc.set_level(2.0, 1.0)
    acc.set_level(0.0, 4.0)
    assert acc.integral == pytest.approx(6.0)
    assert acc.time_average(0.0, 6.0) == pytest.approx(1.0)
