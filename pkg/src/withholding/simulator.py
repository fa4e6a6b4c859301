"""Timed Monte Carlo of repeated strategy cycles.

Random numbers come from numpy's Philox4x32-10 counter-based generator.
Every chunk of cycles (or every long-run replication) gets its own key,
derived as ``SeedSequence(seed, spawn_key=(purpose, index))``, so the
output depends only on the master seed and never on the number of
workers. Uniforms are ``Generator.random`` doubles; a block is the
attacker's when its uniform is below ``q``, and arrival gaps are
``-log1p(-u) / rate`` (inverse CDF of the exponential law).

Cycles are drawn in batches: each batch holds a ``(depth, m)`` array of
letter uniforms and another of gap uniforms, ``depth`` being the longest
terminal word of the strategy; cycle ``j`` consumes column ``j`` from the
top until its word terminates and the rest of the column is discarded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .difficulty import DifficultyState, network_rate, retarget_general
from .model import (
    ATTACKER,
    CycleRecord,
    NetworkParams,
    ProfitabilityReport,
    Variant,
    gamma_for,
    make_record,
)
from .strategies import StrategySpec, terminal_words

DEFAULT_SEED = 20240229
CHUNK = 1 << 16
LONGRUN_BATCH = 4096
RECORD_COLUMNS = ("word", "g", "h", "d", "duration", "off_a", "orph_a", "orph_pub_a", "off_h", "orph_h", "reward")

_CYCLES, _LONGRUN = 0, 1


def stream(seed: int, index: int, purpose: int = _CYCLES) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(purpose, index))))


@dataclass(frozen=True, eq=False)
class CompiledStrategy:
    """Array form of a strategy: a transition table over the word trie plus
    per-terminal accounting columns."""

    strategy: StrategySpec
    x: float
    words: tuple[str, ...]
    table: np.ndarray  # (nodes, 2); column 0 = A, 1 = B; negative entry -(t+1) is terminal t
    depth: int
    length: np.ndarray
    n_a: np.ndarray
    g: np.ndarray
    h: np.ndarray
    d: np.ndarray
    reported_orphans: np.ndarray
    reward: np.ndarray
    records: tuple[CycleRecord, ...]


def compile_strategy(strategy: StrategySpec, x: float = 0.0) -> CompiledStrategy:
    words = terminal_words(strategy)
    index = {w: t for t, w in enumerate(words)}
    nodes = {"": 0}
    for w in words:
        for k in range(1, len(w)):
            nodes.setdefault(w[:k], len(nodes))
    table = np.zeros((len(nodes), 2), dtype=np.int64)
    for prefix, node in nodes.items():
        for col, letter in enumerate("AB"):
            nxt = prefix + letter
            table[node, col] = -(index[nxt] + 1) if nxt in index else nodes[nxt]
    recs = tuple(make_record(w, strategy.resolve(w), x) for w in words)
    col = lambda f, dtype=np.int64: np.array([f(r) for r in recs], dtype=dtype)
    return CompiledStrategy(
        strategy=strategy,
        x=x,
        words=words,
        table=table,
        depth=max(map(len, words)),
        length=col(lambda r: len(r.word)),
        n_a=col(lambda r: r.word.count(ATTACKER)),
        g=col(lambda r: r.g),
        h=col(lambda r: r.h),
        d=col(lambda r: r.d),
        reported_orphans=col(lambda r: r.orph_h + r.orph_pub_a),
        reward=col(lambda r: r.reward, np.float64),
        records=recs,
    )


def sample_cycles(comp: CompiledStrategy, q: float, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``m`` cycles; returns terminal indices and unit-rate durations."""
    letters = rng.random((comp.depth, m))
    gaps = rng.random((comp.depth, m))
    node = np.zeros(m, dtype=np.int64)
    term = np.full(m, -1, dtype=np.int64)
    for i in range(comp.depth):
        live = np.flatnonzero(term < 0)
        if live.size == 0:
            break
        nxt = comp.table[node[live], (letters[i, live] >= q).astype(np.int64)]
        done = nxt < 0
        term[live[done]] = -nxt[done] - 1
        node[live[~done]] = nxt[~done]
    used = np.arange(comp.depth)[:, None] < comp.length[term][None, :]
    unit = np.where(used, -np.log1p(-gaps), 0.0).sum(axis=0)
    return term, unit


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _ratio_stderr(num: np.ndarray, den: np.ndarray) -> float:
    """Delta-method standard error of ``mean(num) / mean(den)``."""
    n = len(num)
    if n < 2:
        return float("nan")
    r = num.mean() / den.mean()
    return float(np.std(num - r * den, ddof=1) / math.sqrt(n) / den.mean())


@dataclass(eq=False)
class CycleSample:
    """Outcome of ``simulate_cycles``: per-cycle arrays plus the summary."""

    comp: CompiledStrategy
    params: NetworkParams
    terms: np.ndarray
    durations: np.ndarray | None
    rate: float
    report: ProfitabilityReport = field(init=False)
    variant: Variant = Variant.STANDARD

    def __len__(self):
        return len(self.terms)

    def column(self, name: str) -> np.ndarray:
        return getattr(self.comp, name)[self.terms]

    def records(self) -> Iterator[CycleRecord]:
        recs = self.comp.records
        if self.durations is None:
            for t in self.terms:
                yield recs[t]
            return
        for t, dur in zip(self.terms.tolist(), self.durations.tolist()):
            r = recs[t]
            yield CycleRecord(r.word, r.g, r.h, r.d, dur, r.off_a, r.orph_a, r.orph_pub_a, r.off_h, r.orph_h, r.reward)

    def word_counts(self) -> dict[str, int]:
        counts = np.bincount(self.terms, minlength=len(self.comp.words))
        return dict(zip(self.comp.words, counts.tolist()))

    def write_csv(self, fh) -> None:
        from .output import fmt

        fh.write(",".join(RECORD_COLUMNS) + "\n")
        heads, tails = [], []
        for r in self.comp.records:
            heads.append(f"{r.word},{r.g},{r.h},{r.d},")
            tails.append(f",{r.off_a},{r.orph_a},{r.orph_pub_a},{r.off_h},{r.orph_h},{fmt(r.reward)}\n")
        durs = [""] * len(self.terms) if self.durations is None else map(fmt, self.durations.tolist())
        fh.writelines(heads[t] + dur + tails[t] for t, dur in zip(self.terms.tolist(), durs))


def simulate_cycles(
    strategy: StrategySpec,
    params: NetworkParams,
    n_cycles: int,
    seed: int = DEFAULT_SEED,
    variant: Variant = Variant.STANDARD,
    timed: bool = True,
    workers: int = 1,
    delta: float = 1.0,
    chunk: int = CHUNK,
) -> CycleSample:
    """Independent cycles at constant difficulty ``delta``."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    comp = compile_strategy(strategy, params.orphan_reward_x)
    rate = network_rate(params, delta).total
    n_chunks = -(-n_cycles // chunk)

    def run(k):
        m = min(chunk, n_cycles - k * chunk)
        return sample_cycles(comp, params.q, stream(seed, k), m)

    parts = _map(run, range(n_chunks), workers)
    terms = np.concatenate([p[0] for p in parts])
    durations = np.concatenate([p[1] for p in parts]) / rate if timed else None
    sample = CycleSample(comp, params, terms, durations, rate, variant=Variant(variant))
    sample.report = _mc_report(sample, Variant(variant))
    return sample


def _mc_report(sample: CycleSample, variant: Variant) -> ProfitabilityReport:
    params = sample.params
    g = sample.column("g").astype(float)
    h = sample.column("h").astype(float)
    d = sample.column("d").astype(float)
    reward = sample.column("reward")
    tau = sample.durations if sample.durations is not None else params.tau0 * sample.column("length").astype(float)
    den = {Variant.STANDARD: h, Variant.ORPHAN: d, Variant.NONE: tau / params.tau0}[variant]
    e_tau = float(tau.mean())
    return ProfitabilityReport(
        gamma=gamma_for(variant, float(reward.mean()), float(h.mean()), float(d.mean()), e_tau, params.tau0),
        e_g=float(g.mean()),
        e_h=float(h.mean()),
        e_d=float(d.mean()),
        e_tau=e_tau,
        e_reward=float(reward.mean()),
        variant=variant,
        mode="montecarlo",
        stderr=_ratio_stderr(reward, den),
        n=len(g),
    )


@dataclass(frozen=True)
class IdentityCheck:
    observed: float  # mean block count per cycle
    compensator: float  # rate times mean cycle duration
    stderr: float

    @property
    def discrepancy(self) -> float:
        return self.observed - self.compensator

    @property
    def passed(self) -> bool:
        return abs(self.discrepancy) < 3.0 * self.stderr


@dataclass(frozen=True)
class MartingaleReport:
    """Stopped compensated Poisson processes have mean zero."""

    attacker: IdentityCheck
    honest: IdentityCheck
    counting_identity: bool  # N + N' equals the word length in every cycle
    n_cycles: int

    @property
    def passed(self) -> bool:
        return self.attacker.passed and self.honest.passed and self.counting_identity


def _identity(counts: np.ndarray, rate: float, tau: np.ndarray) -> IdentityCheck:
    diff = counts - rate * tau
    return IdentityCheck(
        observed=float(counts.mean()),
        compensator=float(rate * tau.mean()),
        stderr=float(diff.std(ddof=1) / math.sqrt(len(diff))),
    )


def martingale_check(strategy: StrategySpec, params: NetworkParams, n_cycles: int, seed: int = DEFAULT_SEED, workers: int = 1) -> MartingaleReport:
    sample = simulate_cycles(strategy, params, n_cycles, seed, workers=workers)
    rates = network_rate(params, 1.0)
    n_att = sample.column("n_a").astype(float)
    length = sample.column("length").astype(float)
    n_hon = length - n_att
    return MartingaleReport(
        attacker=_identity(n_att, rates.attacker, sample.durations),
        honest=_identity(n_hon, rates.honest, sample.durations),
        counting_identity=bool(np.array_equal(n_att + n_hon, length)),
        n_cycles=n_cycles,
    )


@dataclass(frozen=True)
class BoundReport:
    """Revenue per minute against the honest ceiling ``q / tau0``."""

    ratio: float
    bound: float
    stderr: float
    n_cycles: int

    @property
    def passed(self) -> bool:
        return self.ratio <= self.bound + 3.0 * self.stderr


def no_daa_bound_check(strategy: StrategySpec, params: NetworkParams, n_cycles: int, seed: int = DEFAULT_SEED, workers: int = 1) -> BoundReport:
    sample = simulate_cycles(strategy, params, n_cycles, seed, variant=Variant.NONE, workers=workers)
    g = sample.column("g").astype(float)
    tau = sample.durations
    return BoundReport(
        ratio=float(g.mean() / tau.mean()),
        bound=params.q / params.tau0,
        stderr=_ratio_stderr(g, tau),
        n_cycles=n_cycles,
    )


@dataclass(frozen=True)
class EpochRow:
    replication: int
    epoch: int
    delta: float
    official: int
    orphans: int
    elapsed_minutes: float
    cycles: int
    reward: float
    d: int


@dataclass(frozen=True)
class LongRunResult:
    variant: Variant
    revenue_per_tau0: float
    revenue_per_tau0_stderr: float
    gamma_per_block: float
    gamma_per_block_stderr: float
    minutes_per_official: float
    minutes_per_official_stderr: float
    minutes_per_d_unit: float
    minutes_per_d_unit_stderr: float
    equilibrium_delta: float
    equilibrium_delta_stderr: float
    epochs_simulated: int
    warmup_epochs: int
    replications: int
    epochs: tuple[EpochRow, ...] = field(repr=False, default=())


def _run_replication(comp: CompiledStrategy, params: NetworkParams, variant: Variant, n_epochs: int, seed: int, rep: int) -> list[EpochRow]:
    rng = stream(seed, rep, _LONGRUN)
    n0, tau0 = params.n0, params.tau0
    terms = np.empty(0, dtype=np.int64)
    unit = np.empty(0)
    state = DifficultyState(1.0)
    rows = []
    for epoch in range(n_epochs):
        while True:
            cum = np.cumsum(comp.h[terms])
            k = int(np.searchsorted(cum, n0))
            if k < len(cum):
                break
            t_new, u_new = sample_cycles(comp, params.q, rng, LONGRUN_BATCH)
            terms, unit = np.concatenate([terms, t_new]), np.concatenate([unit, u_new])
        take = terms[: k + 1]
        # unit-rate durations scale with the mean block time tau0 * delta / delta_ref
        elapsed = float(unit[: k + 1].sum()) * tau0 * state.delta
        state = state.advance(int(cum[k]), int(comp.reported_orphans[take].sum()), elapsed)
        d_total = int(comp.d[take].sum())
        rows.append(
            EpochRow(rep, epoch, state.delta, state.official_in_epoch, state.orphans_in_epoch, elapsed, k + 1, float(comp.reward[take].sum()), d_total)
        )
        if variant is Variant.STANDARD:
            new = retarget_general(state, state.official_in_epoch, tau0)
        elif variant is Variant.ORPHAN:
            new = retarget_general(state, state.official_in_epoch + state.orphans_in_epoch, tau0)
        else:
            new = state.delta
        state = state.restart(new)
        terms, unit = terms[k + 1 :], unit[k + 1 :]
    return rows


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else float("nan")
    return float(arr.mean()), se


def simulate_longrun(
    strategy: StrategySpec,
    params: NetworkParams,
    variant: Variant = Variant.STANDARD,
    n_epochs: int = 50,
    warmup: int = 10,
    seed: int = DEFAULT_SEED,
    replications: int = 1,
    workers: int = 1,
) -> LongRunResult:
    """Back-to-back cycles with retargeting at cycle-aligned epoch ends.

    An epoch closes at the first cycle end where it holds at least ``n0``
    official blocks; the retarget then uses the epoch's actual official
    count (plus its reported orphans for the orphan-aware rule). Ratio
    estimates pool all post-warmup epochs of all replications; standard
    errors are taken over per-epoch values.
    """
    variant = Variant(variant)
    if not n_epochs > warmup >= 1:
        raise ValueError("need n_epochs > warmup >= 1")
    if replications < 1:
        raise ValueError("replications must be at least 1")
    comp = compile_strategy(strategy, params.orphan_reward_x)
    per_rep = _map(lambda r: _run_replication(comp, params, variant, n_epochs, seed, r), range(replications), workers)
    rows = [row for rep_rows in per_rep for row in rep_rows]
    post = [r for r in rows if r.epoch >= warmup]
    tau0 = params.tau0
    reward = sum(r.reward for r in post)
    elapsed = sum(r.elapsed_minutes for r in post)
    official = sum(r.official for r in post)
    d_units = sum(r.d for r in post)
    per_block = d_units if variant is Variant.ORPHAN else official
    _, rev_se = _mean_se([tau0 * r.reward / r.elapsed_minutes for r in post])
    _, gam_se = _mean_se([r.reward / (r.d if variant is Variant.ORPHAN else r.official) for r in post])
    _, off_se = _mean_se([r.elapsed_minutes / r.official for r in post])
    _, dun_se = _mean_se([r.elapsed_minutes / r.d for r in post])
    delta_mean, delta_se = _mean_se([r.delta for r in post])
    return LongRunResult(
        variant=variant,
        revenue_per_tau0=tau0 * reward / elapsed,
        revenue_per_tau0_stderr=rev_se,
        gamma_per_block=reward / per_block,
        gamma_per_block_stderr=gam_se,
        minutes_per_official=elapsed / official,
        minutes_per_official_stderr=off_se,
        minutes_per_d_unit=elapsed / d_units,
        minutes_per_d_unit_stderr=dun_se,
        equilibrium_delta=delta_mean,
        equilibrium_delta_stderr=delta_se,
        epochs_simulated=n_epochs,
        warmup_epochs=warmup,
        replications=replications,
        epochs=tuple(rows),
    )
