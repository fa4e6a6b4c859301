"""Domain types shared by the strategy, analytic and simulation layers.

Blocks are abstract counters. A cycle is encoded as a word over ``A``
(attacker found the block) and ``B`` (honest network found it); all
rewards are in coinbase units, i.e. one official block is worth 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

ATTACKER = "A"
HONEST = "B"

HASHRATE_TOL = 1e-12


class ParamError(ValueError):
    """Raised for inconsistent network parameters."""


class Variant(str, enum.Enum):
    """Difficulty adjustment rule in force.

    ``none`` keeps difficulty constant, ``standard`` retargets on official
    blocks only, ``orphan`` also counts reported orphan blocks.
    """

    NONE = "none"
    STANDARD = "standard"
    ORPHAN = "orphan"


@dataclass(frozen=True)
class NetworkParams:
    q: float | None = None
    tau0: float = 10.0
    n0: int = 2016
    orphan_reward_x: float = 0.0
    hash_honest: float | None = None
    hash_attacker: float | None = None
    p: float = field(init=False)

    def __post_init__(self):
        q = self.q
        if q is None:
            if self.hash_honest is None or self.hash_attacker is None:
                raise ParamError("q is required unless both absolute hashrates are given")
            if self.hash_honest <= 0 or self.hash_attacker <= 0:
                raise ParamError("absolute hashrates must be positive")
            q = self.hash_attacker / (self.hash_honest + self.hash_attacker)
            object.__setattr__(self, "q", q)
        _check(self)
        object.__setattr__(self, "p", 1.0 - self.q)


def _check(params: NetworkParams) -> None:
    q = params.q
    if not isinstance(q, (int, float)) or not 0.0 < q < 1.0:
        raise ParamError(f"q out of range (0, 1): {q!r}")
    if not params.tau0 > 0:
        raise ParamError(f"tau0 must be positive: {params.tau0!r}")
    if int(params.n0) != params.n0 or params.n0 < 1:
        raise ParamError(f"n0 must be a positive integer: {params.n0!r}")
    if not 0.0 <= params.orphan_reward_x <= 1.0:
        raise ParamError(f"orphan reward fraction out of range [0, 1]: {params.orphan_reward_x!r}")
    h, h2 = params.hash_honest, params.hash_attacker
    if (h is None) != (h2 is None):
        raise ParamError("set both absolute hashrates or neither")
    if h is not None:
        if h <= 0 or h2 <= 0:
            raise ParamError("absolute hashrates must be positive")
        implied = h2 / (h + h2)
        if abs(implied - q) > HASHRATE_TOL:
            raise ParamError(f"q={q!r} inconsistent with hashrates (implies {implied!r})")


def validate_params(params: NetworkParams) -> NetworkParams:
    """Re-check ``params`` and return a copy with ``p`` recomputed as ``1 - q``."""
    _check(params)
    return replace(params)


@dataclass(frozen=True)
class Resolution:
    """Disposition of the blocks found during one cycle."""

    off_a: int = 0
    orph_a: int = 0
    orph_pub_a: int = 0
    off_h: int = 0
    orph_h: int = 0

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.off_a, self.orph_a, self.orph_pub_a, self.off_h, self.orph_h)


@dataclass(frozen=True)
class CycleRecord:
    word: str
    g: int
    h: int
    d: int
    duration: float | None
    off_a: int
    orph_a: int
    orph_pub_a: int
    off_h: int
    orph_h: int
    reward: float

    @property
    def resolution(self) -> Resolution:
        return Resolution(self.off_a, self.orph_a, self.orph_pub_a, self.off_h, self.orph_h)


def make_record(word: str, res: Resolution, x: float = 0.0, duration: float | None = None) -> CycleRecord:
    """Build the record of a terminated cycle from its block disposition."""
    h = res.off_a + res.off_h
    return CycleRecord(
        word=word,
        g=res.off_a,
        h=h,
        d=h + res.orph_h + res.orph_pub_a,
        duration=duration,
        off_a=res.off_a,
        orph_a=res.orph_a,
        orph_pub_a=res.orph_pub_a,
        off_h=res.off_h,
        orph_h=res.orph_h,
        reward=res.off_a + x * res.orph_pub_a,
    )


def word_probability(word: str, q: float) -> float:
    """Probability ``p**#B * q**#A`` of observing ``word`` as the next letters."""
    n_a = word.count(ATTACKER)
    return q**n_a * (1.0 - q) ** (len(word) - n_a)


def check_accounting(rec: CycleRecord, x: float | None = None) -> bool:
    """True iff every accounting identity of ``rec`` holds.

    ``x`` is the orphan reward fraction used to check ``reward``; when
    omitted the reward is only required to lie between ``g`` and
    ``g + orph_pub_a``.
    """
    word = rec.word
    if not word or set(word) - {ATTACKER, HONEST}:
        return False
    counts = (rec.g, rec.h, rec.d, rec.off_a, rec.orph_a, rec.orph_pub_a, rec.off_h, rec.orph_h)
    if any(c < 0 for c in counts):
        return False
    n_a = word.count(ATTACKER)
    if rec.off_a + rec.orph_a != n_a or rec.off_h + rec.orph_h != len(word) - n_a:
        return False
    if rec.h != rec.off_a + rec.off_h or rec.g != rec.off_a:
        return False
    if rec.d != rec.h + rec.orph_h + rec.orph_pub_a or rec.orph_pub_a > rec.orph_a:
        return False
    if rec.duration is not None and not rec.duration > 0:
        return False
    if x is None:
        return rec.g - 1e-12 <= rec.reward <= rec.g + rec.orph_pub_a + 1e-12
    return abs(rec.reward - (rec.g + x * rec.orph_pub_a)) <= 1e-12 * max(1.0, abs(rec.reward))


@dataclass(frozen=True)
class ProfitabilityReport:
    """Per-cycle expectations and the resulting profitability ratio.

    ``gamma`` is ``e_reward / e_h`` under the standard rule,
    ``e_reward / e_d`` under the orphan-aware rule and
    ``tau0 * e_reward / e_tau`` (revenue per target block time) without
    difficulty adjustment.
    """

    gamma: float
    e_g: float
    e_h: float
    e_d: float
    e_tau: float
    e_reward: float
    variant: Variant = Variant.STANDARD
    mode: str = "exact"
    stderr: float | None = None
    n: int | None = None


def gamma_for(variant: Variant, e_reward: float, e_h: float, e_d: float, e_tau: float, tau0: float) -> float:
    variant = Variant(variant)
    if variant is Variant.STANDARD:
        return e_reward / e_h
    if variant is Variant.ORPHAN:
        return e_reward / e_d
    return tau0 * e_reward / e_tau
