"""Finite mining strategies as controllers over block-arrival words."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .forks import is_realizable
from .model import ATTACKER, HONEST, CycleRecord, NetworkParams, Resolution, check_accounting, make_record

DEFAULT_MAX_CYCLE_LENGTH = 64
RESOLUTION_FIELDS = ("off_a", "orph_a", "orph_pub_a", "off_h", "orph_h")


class StrategyError(ValueError):
    pass


class Decision(enum.Enum):
    CONTINUE = "continue"
    END = "end"


@dataclass(frozen=True)
class StrategySpec:
    """A finite strategy.

    ``step`` sees the letters found so far in the cycle and says whether
    the cycle ends there; ``resolve`` gives the block disposition of a
    terminal word.
    """

    name: str
    step: Callable[[str], Decision]
    resolve: Callable[[str], Resolution]
    max_cycle_length: int = DEFAULT_MAX_CYCLE_LENGTH

    def terminals(self) -> tuple[str, ...]:
        return terminal_words(self)


@lru_cache(maxsize=256)
def terminal_words(strategy: StrategySpec) -> tuple[str, ...]:
    """Terminal words of ``strategy`` in breadth-first, A-before-B order."""
    out: list[str] = []
    frontier = [""]
    while frontier:
        nxt = []
        for prefix in frontier:
            for letter in (ATTACKER, HONEST):
                word = prefix + letter
                if strategy.step(word) is Decision.END:
                    out.append(word)
                elif len(word) >= strategy.max_cycle_length:
                    raise StrategyError(
                        f"strategy {strategy.name!r} does not end cycle {word!r} "
                        f"within {strategy.max_cycle_length} blocks"
                    )
                else:
                    nxt.append(word)
        frontier = nxt
    return tuple(out)


_HONEST = {ATTACKER: Resolution(off_a=1), HONEST: Resolution(off_h=1)}


def honest_strategy() -> StrategySpec:
    """Publish every block at once; a cycle is a single block."""
    return _HONEST_SPEC


def _honest_step(prefix: str) -> Decision:
    return Decision.END if prefix else Decision.CONTINUE


_HONEST_SPEC = StrategySpec("honest", _honest_step, _HONEST.__getitem__)


ONE_PLUS_TWO = {
    "B": Resolution(off_h=1),
    "AAA": Resolution(off_a=3),
    "AAB": Resolution(off_a=2, orph_h=1),
    "ABA": Resolution(off_a=2, orph_h=1),
    # the lone attacker block is beaten and never shown
    "ABB": Resolution(orph_a=1, off_h=2),
}


def _one_plus_two_step(prefix: str) -> Decision:
    if prefix == HONEST or len(prefix) >= 3:
        return Decision.END
    return Decision.CONTINUE


_ONE_PLUS_TWO_SPEC = StrategySpec("one-plus-two", _one_plus_two_step, ONE_PLUS_TWO.__getitem__)


def one_plus_two_strategy() -> StrategySpec:
    """Withhold a first block, then end the cycle after two more blocks.

    The secret branch is released when it ends up longer than the honest
    one (AAA, AAB, ABA) and dropped otherwise (ABB).
    """
    return _ONE_PLUS_TWO_SPEC


def check_prefix_code(terminals, bound: int = DEFAULT_MAX_CYCLE_LENGTH) -> None:
    """Raise unless ``terminals`` is a complete prefix-free code over {A, B}."""
    words = list(terminals)
    if not words:
        raise StrategyError("no terminal words")
    if len(set(words)) != len(words):
        raise StrategyError("duplicate terminal words")
    for w in words:
        if not w or set(w) - {ATTACKER, HONEST}:
            raise StrategyError(f"bad terminal word {w!r}")
        if len(w) > bound:
            raise StrategyError(f"terminal {w!r} longer than bound {bound}")
    ordered = sorted(words)
    for a, b in zip(ordered, ordered[1:]):
        if b.startswith(a):
            raise StrategyError(f"overlapping terminals: {a!r} is a prefix of {b!r}")
    kraft = sum(Fraction(1, 2 ** len(w)) for w in words)
    if kraft != 1:
        raise StrategyError("terminals do not cover every letter sequence (incomplete prefix code)")


def word_rule_strategy(
    terminals,
    resolutions: Mapping[str, Resolution],
    bound: int = DEFAULT_MAX_CYCLE_LENGTH,
    name: str = "word-rule",
    check_legality: bool = True,
) -> StrategySpec:
    """Build a strategy from explicit terminal words and their resolutions.

    Legality means a single attacker policy that does not peek at future
    blocks produces all the resolutions (see ``forks``). The check is
    exponential in word length; pass ``check_legality=False`` for long
    words that are known to be legal.
    """
    terms = frozenset(terminals)
    check_prefix_code(terms, bound)
    missing = terms - set(resolutions)
    if missing:
        raise StrategyError(f"no resolution for {sorted(missing)}")
    table = {w: resolutions[w] for w in terms}
    for w, res in table.items():
        if not check_accounting(make_record(w, res)):
            raise StrategyError(f"resolution of {w!r} does not account for its blocks: {res}")
    if check_legality and not is_realizable(table):
        raise StrategyError("resolutions cannot be produced by any fork-choice-legal attacker policy")
    inner = frozenset(w[:k] for w in terms for k in range(1, len(w)))

    def step(prefix: str) -> Decision:
        if prefix in terms:
            return Decision.END
        if prefix and prefix not in inner:
            raise StrategyError(f"prefix {prefix!r} unreachable")
        return Decision.CONTINUE

    return StrategySpec(name, step, table.__getitem__, bound)


def resolution_table(strategy: StrategySpec) -> dict[str, Resolution]:
    return {w: strategy.resolve(w) for w in terminal_words(strategy)}


def random_word_rule_strategy(rng: np.random.Generator, max_len: int = 5, stop_prob: float = 0.4, name: str | None = None) -> StrategySpec:
    from .forks import random_realizable_map

    table = random_realizable_map(rng, max_len=max_len, stop_prob=stop_prob)
    return word_rule_strategy(table, table, bound=max_len, name=name or "random-word-rule")


def run_cycle(strategy: StrategySpec, params: NetworkParams, rng: np.random.Generator, timed: bool = True, rate: float | None = None) -> CycleRecord:
    """Play one cycle letter by letter.

    Each block goes to the attacker with probability ``q``; when
    ``timed``, its arrival gap is exponential with the total network
    ``rate`` (blocks per minute, ``1/tau0`` by default), drawn by inverse
    CDF from the same uniform stream.
    """
    if rate is None:
        rate = 1.0 / params.tau0
    word = ""
    duration = 0.0
    while True:
        word += ATTACKER if rng.random() < params.q else HONEST
        if timed:
            duration += -np.log1p(-rng.random()) / rate
        if strategy.step(word) is Decision.END:
            break
        if len(word) >= strategy.max_cycle_length:
            raise StrategyError(f"strategy {strategy.name!r} exceeded its bound")
    return make_record(word, strategy.resolve(word), params.orphan_reward_x, duration if timed else None)


BUILTIN = {
    "honest": honest_strategy,
    "one-plus-two": one_plus_two_strategy,
}


def load_word_rule_file(path, bound: int = DEFAULT_MAX_CYCLE_LENGTH, check_legality: bool = True) -> StrategySpec:
    """Read a word-rule strategy from CSV.

    Columns ``word`` and the five resolution counts are required; ``g``,
    ``h`` and ``d`` may be present and must then agree. Lines starting
    with ``#`` are ignored.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if line.strip() and not line.lstrip().startswith("#")))
    if not rows:
        raise StrategyError(f"{path}: no records")
    table: dict[str, Resolution] = {}
    for n, row in enumerate(rows, start=2):
        try:
            word = row["word"].strip()
            res = Resolution(**{k: int(row[k]) for k in RESOLUTION_FIELDS})
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise StrategyError(f"{path}: record {n}: {exc}") from None
        rec = make_record(word, res)
        for k in ("g", "h", "d"):
            if row.get(k) not in (None, "") and int(row[k]) != getattr(rec, k):
                raise StrategyError(f"{path}: record {n}: {k}={row[k]} inconsistent with counts")
        if word in table:
            raise StrategyError(f"{path}: duplicate word {word!r}")
        table[word] = res
    return word_rule_strategy(table, table, bound=bound, name=path.stem, check_legality=check_legality)


def write_word_rule_file(strategy: StrategySpec, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("word",) + RESOLUTION_FIELDS)
        for word, res in resolution_table(strategy).items():
            w.writerow((word,) + res.as_tuple())


def get_strategy(name_or_path: str) -> StrategySpec:
    if name_or_path in BUILTIN:
        return BUILTIN[name_or_path]()
    path = Path(name_or_path)
    if path.is_file():
        return load_word_rule_file(path)
    raise StrategyError(f"unknown strategy {name_or_path!r} (builtin: {', '.join(BUILTIN)}, or a word-rule file)")
