"""Exact per-cycle expectations by walking a strategy's word tree."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import forks
from .model import (
    CycleRecord,
    NetworkParams,
    ProfitabilityReport,
    Resolution,
    Variant,
    check_accounting,
    gamma_for,
    make_record,
    word_probability,
)
from .strategies import StrategySpec, terminal_words, word_rule_strategy

PROB_TOL = 1e-12
THRESHOLD_TOL = 1e-9
ZERO_TOL = 1e-12


class AccountingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CycleDistribution:
    entries: Mapping[str, tuple[float, CycleRecord]]

    def total_probability(self) -> float:
        return math.fsum(p for p, _ in self.entries.values())


def enumerate_cycles(strategy: StrategySpec, params: NetworkParams) -> CycleDistribution:
    """Exact distribution of terminal words with their resolved records."""
    entries = {}
    for word in terminal_words(strategy):
        rec = make_record(word, strategy.resolve(word), params.orphan_reward_x)
        if not check_accounting(rec, params.orphan_reward_x):
            raise AccountingError(f"{strategy.name}: bad accounting for {word!r}: {rec}")
        entries[word] = (word_probability(word, params.q), rec)
    return CycleDistribution(entries)


def expectations(dist: CycleDistribution, params: NetworkParams, variant: Variant = Variant.STANDARD) -> ProfitabilityReport:
    """Exact expectations per cycle.

    Without timing information the mean cycle duration is the mean word
    length times ``tau0`` (every block takes ``tau0`` on average at the
    reference difficulty).
    """
    probs = np.array([p for p, _ in dist.entries.values()])
    recs = [r for _, r in dist.entries.values()]

    def mean(attr):
        return math.fsum(p * getattr(r, attr) for p, r in zip(probs, recs))

    e_g, e_h, e_d, e_reward = mean("g"), mean("h"), mean("d"), mean("reward")
    e_tau = params.tau0 * math.fsum(p * len(r.word) for p, r in zip(probs, recs))
    return ProfitabilityReport(
        gamma=gamma_for(variant, e_reward, e_h, e_d, e_tau, params.tau0),
        e_g=e_g,
        e_h=e_h,
        e_d=e_d,
        e_tau=e_tau,
        e_reward=e_reward,
        variant=Variant(variant),
        mode="exact",
    )


def exact_report(strategy: StrategySpec, params: NetworkParams, variant: Variant = Variant.STANDARD) -> ProfitabilityReport:
    return expectations(enumerate_cycles(strategy, params), params, variant)


def closed_form_gamma_one_plus_two(q: float) -> float:
    """Standard-rule profitability of "1+2": q^2 (4 - q) / (1 + q + q^3)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q out of range (0, 1): {q!r}")
    return q * q * (4.0 - q) / (1.0 + q + q**3)


def closed_form_gamma_one_plus_two_orphan(q: float) -> float:
    """Orphan-aware profitability of "1+2", using E[D] = 1 + q + 2q^2 - q^3."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q out of range (0, 1): {q!r}")
    return q * q * (4.0 - q) / (1.0 + q + 2.0 * q * q - q**3)


@dataclass(frozen=True)
class ThresholdReport:
    strategy: str
    variant: Variant
    status: str  # "root", "none" or "identically-zero"
    root: float | None = None
    tolerance: float = THRESHOLD_TOL

    def __str__(self):
        value = "" if self.root is None else repr(self.root)
        return f"strategy={self.strategy} variant={self.variant.value} status={self.status} root={value}"


def _advantage(strategy, variant, q, x, tau0):
    params = NetworkParams(q=q, orphan_reward_x=x, tau0=tau0)
    return exact_report(strategy, params, variant).gamma - q


def threshold(
    strategy: StrategySpec,
    variant: Variant = Variant.STANDARD,
    x: float = 0.0,
    tau0: float = 10.0,
    grid_points: int = 999,
) -> ThresholdReport:
    """Smallest hashrate share above which ``strategy`` beats honest mining.

    Scans ``Gamma(q) - q`` on a uniform grid of (0, 1) for the first sign
    change and bisects it to ``THRESHOLD_TOL``.
    """
    variant = Variant(variant)
    grid = np.linspace(0.0, 1.0, grid_points + 2)[1:-1]
    values = [_advantage(strategy, variant, q, x, tau0) for q in grid]
    if all(abs(v) <= ZERO_TOL for v in values):
        return ThresholdReport(strategy.name, variant, "identically-zero")
    for k, v in enumerate(values):
        if v > ZERO_TOL:
            break
    else:
        return ThresholdReport(strategy.name, variant, "none")
    if k == 0:
        lo, hi = 1e-12, float(grid[0])
    else:
        lo, hi = float(grid[k - 1]), float(grid[k])
    while hi - lo > THRESHOLD_TOL / 4:
        mid = 0.5 * (lo + hi)
        if _advantage(strategy, variant, mid, x, tau0) > 0.0:
            hi = mid
        else:
            lo = mid
    return ThresholdReport(strategy.name, variant, "root", 0.5 * (lo + hi))


@dataclass(frozen=True)
class DominanceReport:
    strategy: str
    x: float
    q_grid: tuple[float, ...]
    margins: tuple[float, ...]  # E[reward] - q E[D]
    honest_equivalent: bool

    @property
    def ok(self) -> bool:
        return all(m <= ZERO_TOL for m in self.margins)

    @property
    def strict(self) -> bool:
        """Every margin strictly negative."""
        return all(m < -ZERO_TOL for m in self.margins)


def honest_equivalent(strategy: StrategySpec) -> bool:
    """No orphans anywhere: every outcome matches honest mining's accounting."""
    return all(
        res.orph_a == 0 and res.orph_h == 0
        for res in (strategy.resolve(w) for w in terminal_words(strategy))
    )


def verify_dominance(strategy: StrategySpec, q_grid: Sequence[float], x: float = 0.0) -> DominanceReport:
    """Margins ``E[reward] - q E[D]`` under the orphan-aware rule, one per ``q``."""
    margins = []
    for q in q_grid:
        rep = exact_report(strategy, NetworkParams(q=q, orphan_reward_x=x), Variant.ORPHAN)
        margins.append(rep.e_reward - q * rep.e_d)
    return DominanceReport(strategy.name, x, tuple(q_grid), tuple(margins), honest_equivalent(strategy))


def _map_gamma(table: Mapping[str, Resolution], q: float) -> float:
    g = h = 0.0
    for w, r in table.items():
        p = word_probability(w, q)
        g += p * r.off_a
        h += p * (r.off_a + r.off_h)
    return g / h


def _canonical_key(table: Mapping[str, Resolution]):
    return (
        len(table),
        sum(r.orph_pub_a for r in table.values()),
        sorted((len(w), w, r.as_tuple()) for w, r in table.items()),
    )


_THREE_BLOCK_MAPS: list | None = None


def three_block_strategies() -> list[dict[str, Resolution]]:
    """All legal resolution maps whose cycles end within three blocks (cached)."""
    global _THREE_BLOCK_MAPS
    if _THREE_BLOCK_MAPS is None:
        _THREE_BLOCK_MAPS = forks.realizable_strategies(3)
    return _THREE_BLOCK_MAPS


def best_three_block_strategy(q: float) -> tuple[StrategySpec, float]:
    """Exhaustive standard-rule argmax of the profitability over <=3-block strategies.

    Ties within 1e-12 go to the fewest terminals, then the fewest
    published orphans.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q out of range (0, 1): {q!r}")
    scored = [(_map_gamma(m, q), m) for m in three_block_strategies()]
    top = max(g for g, _ in scored)
    best = min((m for g, m in scored if g >= top - ZERO_TOL), key=_canonical_key)
    strategy = word_rule_strategy(best, best, bound=3, name="best-three-block", check_legality=False)
    return strategy, _map_gamma(best, q)


def same_rules(a: StrategySpec, b: StrategySpec) -> bool:
    """Both strategies have the same terminals and resolutions."""
    ta, tb = terminal_words(a), terminal_words(b)
    return set(ta) == set(tb) and all(a.resolve(w) == b.resolve(w) for w in ta)


SWEEP_COLUMNS = ("q", "gamma_exact", "gamma_formula", "e_g", "e_h", "e_d", "margin_modified")


def formula_gamma(strategy: StrategySpec, q: float, variant: Variant) -> float | None:
    """Closed-form profitability for the built-in strategies, None otherwise."""
    from .strategies import honest_strategy, one_plus_two_strategy

    variant = Variant(variant)
    if same_rules(strategy, honest_strategy()):
        return q
    if same_rules(strategy, one_plus_two_strategy()):
        if variant is Variant.STANDARD:
            return closed_form_gamma_one_plus_two(q)
        if variant is Variant.ORPHAN:
            return closed_form_gamma_one_plus_two_orphan(q)
        return q * q * (4.0 - q) / (1.0 + 2.0 * q)
    return None


def sweep(strategy: StrategySpec, q_grid: Sequence[float], variant: Variant = Variant.STANDARD, x: float = 0.0, tau0: float = 10.0) -> list[dict]:
    rows = []
    for q in q_grid:
        params = NetworkParams(q=q, orphan_reward_x=x, tau0=tau0)
        rep = exact_report(strategy, params, variant)
        rows.append(
            {
                "q": q,
                "gamma_exact": rep.gamma,
                "gamma_formula": formula_gamma(strategy, q, variant),
                "e_g": rep.e_g,
                "e_h": rep.e_h,
                "e_d": rep.e_d,
                "margin_modified": rep.e_reward - q * rep.e_d,
            }
        )
    return rows
