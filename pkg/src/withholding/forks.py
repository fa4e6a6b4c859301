"""Block-tree race model behind fork-choice legality.

A cycle starts from a common public tip (the root, height 0). Blocks
arrive one at a time in the order given by the cycle word:

* an honest block (``B``) is mined on the current public tip, i.e. the
  public block of greatest height, ties going to the block seen first;
* an attacker block (``A``) is mined on any block the attacker chose
  beforehand (public or secret), and stays secret until published.

After every block arrival the attacker may publish a secret branch
before the next race starts; only publications that make the branch
strictly longer than the public tip change anything at that point,
everything else can wait for the cycle end. At the cycle end the attacker publishes any ancestor-closed set of
its secret blocks; whatever stays secret is abandoned. Official blocks
are those on the path from the final tip to the root.

The attacker cannot see the future: what it publishes and the block it
mines on are fixed before the race for the next letter is decided, so
the same choice applies whichever side wins that race. A resolution map over the
terminal words of a strategy is *realizable* when one such policy
produces every listed resolution.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Callable, Iterator, Mapping

import numpy as np

from .model import ATTACKER, HONEST, Resolution

ROOT = -1

# block = (finder, parent, height, seen); seen is None while secret
Block = tuple
State = tuple  # (blocks, next_seen)


def _height(blocks, i):
    return 0 if i == ROOT else blocks[i][2]


def public_tip(blocks) -> int:
    best, best_key = ROOT, (0, -1)
    for i, (_, _, height, seen) in enumerate(blocks):
        if seen is None:
            continue
        key = (height, -seen)
        if key > best_key:
            best, best_key = i, key
    return best


def _ancestors(blocks, i):
    while i != ROOT:
        yield i
        i = blocks[i][1]


def _publish(blocks, chosen, seen) -> tuple:
    out = list(blocks)
    for i in chosen:
        finder, parent, height, s = out[i]
        if s is None:
            out[i] = (finder, parent, height, seen)
    return tuple(out)


def initial_state() -> State:
    return ((), 0)


def mine_attacker(state: State, parent: int) -> State:
    blocks, seen = state
    return (blocks + ((ATTACKER, parent, _height(blocks, parent) + 1, None),), seen)


def mine_honest(state: State) -> State:
    blocks, seen = state
    tip = public_tip(blocks)
    return (blocks + ((HONEST, tip, _height(blocks, tip) + 1, seen),), seen + 1)


def attacker_parents(state: State) -> list[int]:
    """Blocks the attacker may mine on next, root first."""
    return [ROOT, *range(len(state[0]))]


def overtaking_publications(state: State) -> list[State]:
    """States reachable by publishing a branch that overtakes the public tip.

    The first entry is always "publish nothing".
    """
    blocks, seen = state
    tip_height = _height(blocks, public_tip(blocks))
    options = [state]
    for i, (_, _, height, s) in enumerate(blocks):
        if s is None and height > tip_height:
            options.append((_publish(blocks, _ancestors(blocks, i), seen), seen + 1))
    return options


def _closed_secret_sets(blocks) -> Iterator[tuple[int, ...]]:
    secret = [i for i, b in enumerate(blocks) if b[3] is None]
    for mask in range(1 << len(secret)):
        chosen = {secret[k] for k in range(len(secret)) if mask >> k & 1}
        if all(blocks[j][3] is not None or j in chosen for i in chosen for j in _ancestors(blocks, i)):
            yield tuple(sorted(chosen))


def _disposition(blocks) -> Resolution:
    official = set(_ancestors(blocks, public_tip(blocks)))
    counts = {"off_a": 0, "orph_a": 0, "orph_pub_a": 0, "off_h": 0, "orph_h": 0}
    for i, (finder, _, _, seen) in enumerate(blocks):
        if finder == ATTACKER:
            if i in official:
                counts["off_a"] += 1
            else:
                counts["orph_a"] += 1
                counts["orph_pub_a"] += seen is not None
        else:
            counts["off_h" if i in official else "orph_h"] += 1
    return Resolution(**counts)


def end_outcomes(state: State) -> list[Resolution]:
    """Distinct dispositions the attacker can reach by publishing at cycle end.

    Ordered by the size of the published set, smallest first.
    """
    blocks, seen = state
    out: list[Resolution] = []
    for chosen in sorted(_closed_secret_sets(blocks), key=len):
        # simultaneous release; among equal heights the lower index wins
        res = _disposition(_publish(blocks, chosen, seen))
        if res not in out:
            out.append(res)
    return out


def is_realizable(resolutions: Mapping[str, Resolution]) -> bool:
    """True iff a non-anticipating attacker policy yields every resolution.

    ``resolutions`` must be keyed by the terminal words of a complete
    prefix code.
    """
    terminals = dict(resolutions)
    inner = {w[:k] for w in terminals for k in range(len(w))}

    @lru_cache(maxsize=None)
    def feasible(state: State, prefix: str) -> bool:
        if prefix in terminals:
            return terminals[prefix] in end_outcomes(state)
        if prefix not in inner:
            return False
        for st in overtaking_publications(state):
            if not feasible(mine_honest(st), prefix + HONEST):
                continue
            if any(feasible(mine_attacker(st, par), prefix + ATTACKER) for par in attacker_parents(st)):
                return True
        return False

    return feasible(initial_state(), "")


def _realizable_maps(state: State, prefix: str, max_len: int, stop: Callable[[str], bool | None]):
    """All (terminal -> resolution) maps reachable from ``state``.

    ``stop(prefix)`` returns True to force cycle end, False to force
    continuation and None to explore both.
    """
    maps: set[frozenset] = set()
    decision = stop(prefix) if prefix else False
    if len(prefix) >= max_len:
        decision = True
    if decision is not False:
        for res in end_outcomes(state):
            maps.add(frozenset({(prefix, res)}))
    if decision is not True:
        for st in overtaking_publications(state):
            a_maps: set[frozenset] = set()
            for par in attacker_parents(st):
                a_maps |= _realizable_maps(mine_attacker(st, par), prefix + ATTACKER, max_len, stop)
            b_maps = _realizable_maps(mine_honest(st), prefix + HONEST, max_len, stop)
            for ma, mb in product(a_maps, b_maps):
                maps.add(ma | mb)
    return maps


def realizable_strategies(max_len: int, stop: Callable[[str], bool | None] | None = None) -> list[dict[str, Resolution]]:
    """Every realizable resolution map whose words have length at most ``max_len``.

    The search space grows doubly exponentially; ``max_len`` of 3 yields a
    few thousand maps, 4 is already impractical.
    """
    stop = stop or (lambda prefix: None)
    maps = _realizable_maps(initial_state(), "", max_len, stop)
    out = [dict(m) for m in maps]
    out.sort(key=lambda m: sorted((w, r.as_tuple()) for w, r in m.items()))
    return out


def random_realizable_map(rng: np.random.Generator, max_len: int = 5, stop_prob: float = 0.4) -> dict[str, Resolution]:
    """Draw a random terminal code together with a realizable resolution map.

    Cycle ends, mining targets, overtaking publications and final
    releases are all chosen uniformly at random, so the result is legal
    by construction.
    """
    out: dict[str, Resolution] = {}

    def walk(state: State, prefix: str) -> None:
        if prefix and (len(prefix) >= max_len or rng.random() < stop_prob):
            options = end_outcomes(state)
            out[prefix] = options[int(rng.integers(len(options)))]
            return
        pubs = overtaking_publications(state)
        state = pubs[int(rng.integers(len(pubs)))]
        parents = attacker_parents(state)
        walk(mine_attacker(state, parents[int(rng.integers(len(parents)))]), prefix + ATTACKER)
        walk(mine_honest(state), prefix + HONEST)

    walk(initial_state(), "")
    return out
