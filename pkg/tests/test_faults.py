import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfcnet.errors import ConfigError
from mfcnet.faults import FaultLog, build_schedule, fault_code, parse_direction
from mfcnet.transport import Direction, LossInjector, LossModel


def test_fault_code_legend():
    assert fault_code(False, False) == 0
    assert fault_code(True, False) == 1
    assert fault_code(False, True) == 2
    assert fault_code(True, True) == 1  # single-valued track: measurement wins


def test_build_schedule_cut_windows():
    m = build_schedule(
        {"cut_windows": [["plant_to_server", 140, 150], ["server_to_plant", 50, 60]]},
        seed=1,
        duration=200.0,
    )
    assert m.p_fault1 == 0.0 and m.p_fault2 == 0.0
    assert m.cut_windows == (
        (Direction.PLANT_TO_SERVER, 140.0, 150.0),
        (Direction.SERVER_TO_PLANT, 50.0, 60.0),
    )


def test_build_schedule_rates():
    m = build_schedule({"p_fault1": 0.5, "p_fault2": 0.5}, seed=3, duration=200.0)
    assert m.p_fault1 == m.p_fault2 == 0.5
    m = build_schedule({"p_fault1": 0.2402, "p_fault2": 0.2485}, seed=3, duration=250.0)
    assert (m.p_fault1, m.p_fault2) == (0.2402, 0.2485)


def test_build_schedule_empty_spec():
    m = build_schedule(None, seed=0, duration=10.0)
    assert m == LossModel(seed=0)


def test_build_schedule_errors_name_the_field():
    with pytest.raises(ConfigError, match="faults.p_fault1"):
        build_schedule({"p_fault1": 1.2}, seed=0, duration=10.0)
    with pytest.raises(ConfigError, match="faults.p_fault2"):
        build_schedule({"p_fault2": "lots"}, seed=0, duration=10.0)
    with pytest.raises(ConfigError, match=r"faults.cut_windows\[0\]"):
        build_schedule({"cut_windows": [["fault1", 5, 2]]}, seed=0, duration=10.0)
    with pytest.raises(ConfigError, match=r"faults.cut_windows\[0\]"):
        build_schedule({"cut_windows": [["fault1", 0, 99]]}, seed=0, duration=10.0)
    with pytest.raises(ConfigError, match="faults.bogus"):
        build_schedule({"bogus": 1}, seed=0, duration=10.0)
    with pytest.raises(ConfigError, match="sideways"):
        build_schedule({"cut_windows": [["sideways", 0, 1]]}, seed=0, duration=10.0)


def test_parse_direction_aliases():
    for name in ("fault1", "measurement", "plant_to_server", "PLANT_TO_SERVER"):
        assert parse_direction(name) == Direction.PLANT_TO_SERVER
    for name in ("fault2", "control", "server_to_plant"):
        assert parse_direction(name) == Direction.SERVER_TO_PLANT
    assert parse_direction(Direction.SERVER_TO_PLANT) == Direction.SERVER_TO_PLANT


def test_fault_log_totals_and_rate():
    log = FaultLog()
    for k in range(10):
        log.note_send(Direction.PLANT_TO_SERVER, was_dropped=(k % 2 == 0))
    assert log.sent[Direction.PLANT_TO_SERVER] == 10
    assert log.dropped[Direction.PLANT_TO_SERVER] == 5
    assert log.realized_rate(Direction.PLANT_TO_SERVER) == 0.5
    assert log.realized_rate(Direction.SERVER_TO_PLANT) == 0.0


def test_fault_log_track():
    log = FaultLog()
    assert log.record_tick(0.0, False, False) == 0
    assert log.record_tick(0.1, True, False) == 1
    assert log.record_tick(0.2, False, True) == 2
    assert log.events == [(0.0, 0), (0.1, 1), (0.2, 2)]


@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=50))
def test_dropped_never_exceeds_sent(outcomes):
    log = FaultLog()
    for meas, ctrl in outcomes:
        log.note_send(Direction.PLANT_TO_SERVER, meas)
        log.note_send(Direction.SERVER_TO_PLANT, ctrl)
    for d in Direction:
        assert log.dropped[d] <= log.sent[d]


def test_realized_rate_binomial_bound():
    # 10^4 sends at p=0.3: the realized fraction must sit within 3 sigma
    model = build_schedule({"p_fault1": 0.3, "p_fault2": 0.3}, seed=11, duration=10_000.0)
    inj = LossInjector(model)
    log = FaultLog()
    for k in range(10_000):
        t = k * 0.1
        log.note_send(Direction.PLANT_TO_SERVER, inj.should_drop(Direction.PLANT_TO_SERVER, t))
        log.note_send(Direction.SERVER_TO_PLANT, inj.should_drop(Direction.SERVER_TO_PLANT, t))
    bound = 3 * (0.3 * 0.7 / 10_000) ** 0.5
    for d in Direction:
        assert abs(log.realized_rate(d) - 0.3) < bound
