import numpy as np
import pytest

from withholding import forks
from withholding.forks import ROOT, end_outcomes, initial_state, is_realizable, mine_attacker, mine_honest
from withholding.model import Resolution
from withholding.strategies import ONE_PLUS_TWO


def _blocks(state):
    return state[0]


def test_honest_blocks_chain_on_public_tip():
    st = mine_honest(mine_honest(initial_state()))
    assert [b[1] for b in _blocks(st)] == [ROOT, 0]
    assert forks.public_tip(_blocks(st)) == 1


def test_secret_block_does_not_move_honest_miners():
    st = mine_honest(mine_attacker(initial_state(), ROOT))
    assert _blocks(st)[1][1] == ROOT


def test_tie_goes_to_first_seen():
    # A secret, B public at the same height; releasing A at the end loses the tie
    st = mine_honest(mine_attacker(initial_state(), ROOT))
    assert Resolution(off_a=1, orph_h=1) not in end_outcomes(st)
    assert Resolution(orph_a=1, orph_pub_a=1, off_h=1) in end_outcomes(st)


def test_longer_secret_branch_overrides():
    st = mine_attacker(initial_state(), ROOT)
    st = mine_attacker(st, 0)
    st = mine_honest(st)
    assert Resolution(off_a=2, orph_h=1) in end_outcomes(st)


def test_overtaking_publication_redirects_honest_miners():
    st = mine_attacker(initial_state(), ROOT)
    options = forks.overtaking_publications(st)
    assert len(options) == 2
    published = mine_honest(options[1])
    assert _blocks(published)[1][1] == 0


def test_end_outcomes_start_with_withholding_everything():
    st = mine_attacker(initial_state(), ROOT)
    assert end_outcomes(st)[0] == Resolution(orph_a=1)


def test_one_plus_two_is_realizable():
    assert is_realizable(ONE_PLUS_TWO)


def test_clairvoyant_resolution_rejected():
    # publishing A in ABB only (so B's build on it) needs the future
    table = dict(ONE_PLUS_TWO, ABB=Resolution(off_a=1, off_h=2))
    assert not is_realizable(table)


def test_abba_two_to_one_displacement_is_illegal():
    # counts alone would allow AA to displace one B, but the second B
    # lands on the first before the attacker can get ahead
    table = {w: Resolution(off_a=w.count("A"), off_h=w.count("B")) for w in ("B", "AA", "ABA", "ABBB")}
    table["ABBA"] = Resolution(off_a=2, off_h=1, orph_h=1)
    assert not is_realizable(table)
    table["ABBA"] = Resolution(off_a=1, orph_a=1, off_h=2)
    assert is_realizable(table)


def test_incomplete_code_is_not_realizable():
    assert not is_realizable({"A": Resolution(off_a=1), "BA": Resolution(off_a=1, off_h=1)})


@pytest.mark.parametrize("seed", range(30))
def test_random_maps_are_realizable(seed):
    table = forks.random_realizable_map(np.random.default_rng(seed), max_len=4)
    assert is_realizable(table)


def test_three_block_space():
    maps = forks.realizable_strategies(3)
    assert ONE_PLUS_TWO in maps
    honest = {"A": Resolution(off_a=1), "B": Resolution(off_h=1)}
    assert honest in maps
    assert all(max(map(len, m)) <= 3 for m in maps)
