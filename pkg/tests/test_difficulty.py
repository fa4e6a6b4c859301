import pytest
from hypothesis import given
from hypothesis import strategies as st

from withholding.difficulty import (
    DifficultyError,
    DifficultyState,
    network_rate,
    retarget_general,
    retarget_orphan,
    retarget_standard,
)
from withholding.model import NetworkParams


def _epoch(delta, official, orphans, minutes):
    return DifficultyState(delta).advance(official, orphans, minutes)


class TestStandard:
    def test_half_speed_halves(self):
        assert retarget_standard(_epoch(1.0, 2016, 0, 2 * 2016 * 10), 2016, 10) == 0.5

    def test_fixed_point(self):
        assert retarget_standard(_epoch(1.0, 2016, 0, 2016 * 10), 2016, 10) == 1.0

    def test_fast_epoch(self):
        assert retarget_standard(_epoch(2.0, 2016, 0, 10080), 2016, 10) == 4.0

    def test_orphans_ignored(self):
        assert retarget_standard(_epoch(1.0, 2016, 500, 20160), 2016, 10) == 1.0

    def test_incomplete_epoch(self):
        with pytest.raises(DifficultyError):
            retarget_standard(_epoch(1.0, 2015, 0, 20160), 2016, 10)

    def test_zero_elapsed(self):
        with pytest.raises(DifficultyError):
            retarget_standard(_epoch(1.0, 2016, 0, 0.0), 2016, 10)


class TestGeneral:
    def test_formula(self):
        assert retarget_general(_epoch(1.0, 2016, 1008, 30240), 3024, 10) == 1.0

    def test_specialisations(self):
        s = _epoch(1.3, 2016, 77, 19000.0)
        assert retarget_general(s, 2016, 10) == retarget_standard(s, 2016, 10)
        assert retarget_general(s, 2016 + 77, 10) == retarget_orphan(s, 2016, 10)

    def test_nonpositive_progress(self):
        with pytest.raises(DifficultyError):
            retarget_general(_epoch(1.0, 1, 0, 10.0), 0, 10)


class TestOrphan:
    def test_no_orphans_is_standard(self):
        s = _epoch(1.7, 2016, 0, 25000.0)
        assert retarget_orphan(s, 2016, 10) == retarget_standard(s, 2016, 10)

    def test_full_compensation(self):
        assert retarget_orphan(_epoch(1.0, 2016, 2016, 2 * 2016 * 10), 2016, 10) == 1.0

    def test_hundred_orphans(self):
        assert retarget_orphan(_epoch(1.0, 2016, 100, 21160), 2016, 10) == pytest.approx(1.0, abs=1e-15)


@given(
    st.floats(min_value=1e-3, max_value=1e3),
    st.integers(min_value=1, max_value=5000),
    st.integers(min_value=0, max_value=5000),
    st.floats(min_value=1.0, max_value=1e7),
)
def test_orphan_rule_never_lowers_difficulty_below_standard(delta, n0, n1, minutes):
    s = _epoch(delta, n0, n1, minutes)
    assert retarget_orphan(s, n0, 10) >= retarget_standard(s, n0, 10)


def test_state_bookkeeping():
    s = DifficultyState(2.0).advance(3, 1, 12.5).advance(2, 0, 7.5)
    assert (s.official_in_epoch, s.orphans_in_epoch, s.epoch_elapsed) == (5, 1, 20.0)
    r = s.restart(1.5)
    assert r == DifficultyState(1.5)


@pytest.mark.parametrize("delta", [0.0, -1.0])
def test_state_rejects_bad_delta(delta):
    with pytest.raises(DifficultyError):
        DifficultyState(delta)


class TestRates:
    def test_reference(self):
        assert network_rate(NetworkParams(q=0.3), 1.0).total == 0.1

    def test_half_difficulty_doubles_rate(self):
        assert network_rate(NetworkParams(q=0.3), 0.5).total == 0.2

    def test_attacker_rate(self):
        rates = network_rate(NetworkParams(q=0.4), 1.0)
        assert rates.attacker == pytest.approx(0.04, abs=1e-15)
        assert rates.honest + rates.attacker == pytest.approx(rates.total, abs=1e-15)

    def test_bad(self):
        with pytest.raises(DifficultyError):
            network_rate(NetworkParams(q=0.4), 0.0)
