"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary
(see conftest.py), so they show up without ``-s``.
"""

import hashlib
import io
import math
import time

import numpy as np
import pytest

from withholding.analytic import (
    best_three_block_strategy,
    closed_form_gamma_one_plus_two,
    exact_report,
    same_rules,
    threshold,
    verify_dominance,
)
from withholding.model import NetworkParams, Variant
from withholding.simulator import (
    martingale_check,
    no_daa_bound_check,
    simulate_cycles,
    simulate_longrun,
)
from withholding.strategies import honest_strategy, one_plus_two_strategy, random_word_rule_strategy

RESULTS = []
SEED = 42
LONGRUN_REPLICATIONS = 2048


def report(n, ok, detail, elapsed, limit):
    within = elapsed < limit
    line = f"criterion {n}: {'PASS' if ok and within else 'FAIL'}  {detail}  ({elapsed:.2f}s, limit {limit:g}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


def test_criterion_1_closed_form():
    t = time.perf_counter()
    worst = 0.0
    for k in range(1, 20):
        q = 0.05 * k
        gamma = exact_report(one_plus_two_strategy(), NetworkParams(q=q)).gamma
        worst = max(worst, abs(gamma - q * q * (4 - q) / (1 + q + q**3)))
    report(1, worst < 1e-12, f"max |enum - formula| = {worst:.3e} over 19 q values", time.perf_counter() - t, 1)


def test_criterion_2_threshold():
    t = time.perf_counter()
    rep = threshold(one_plus_two_strategy(), Variant.STANDARD)
    err = abs(rep.root - (math.sqrt(2) - 1)) if rep.status == "root" else math.inf
    report(2, err < 1e-9, f"root = {rep.root!r}, |root - (sqrt2 - 1)| = {err:.3e}", time.perf_counter() - t, 1)


def test_criterion_3_dominance():
    t = time.perf_counter()
    worst_formula = 0.0
    for k in range(1, 10):
        q = 0.1 * k
        rep = exact_report(one_plus_two_strategy(), NetworkParams(q=q), Variant.ORPHAN)
        worst_formula = max(worst_formula, abs(rep.e_g - q * rep.e_d + (1 - q) ** 3 * q))
    rng = np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(3,)))
    worst_margin = -math.inf
    grid = [0.1, 0.2, 0.3, 0.4, 0.45]
    for i in range(500):
        s = random_word_rule_strategy(rng, max_len=5, name=f"random-{i}")
        for x in (0.0, 0.5, 1.0):
            worst_margin = max(worst_margin, max(verify_dominance(s, grid, x).margins))
    ok = worst_formula < 1e-12 and worst_margin <= 1e-12
    detail = f"max |E[G]-qE[D]+p^3q| = {worst_formula:.3e}; max margin over 500 strategies = {worst_margin:.3e}"
    report(3, ok, detail, time.perf_counter() - t, 30)


def _criterion_4_sample(workers=1):
    return simulate_cycles(one_plus_two_strategy(), NetworkParams(q=0.5), 1_000_000, seed=SEED, workers=workers)


def test_criterion_4_monte_carlo():
    t = time.perf_counter()
    sample = _criterion_4_sample()
    rep = sample.report
    q = p = 0.5
    n = len(sample)
    z_gamma = (rep.gamma - 0.538461538461538) / rep.stderr
    expected = {"B": p, "AAA": q**3, "AAB": p * q * q, "ABA": p * q * q, "ABB": p * p * q}
    counts = sample.word_counts()
    z_words = {w: (counts[w] / n - pr) / math.sqrt(pr * (1 - pr) / n) for w, pr in expected.items()}
    ok = abs(z_gamma) < 3 and all(abs(z) < 3 for z in z_words.values())
    worst = max(z_words, key=lambda w: abs(z_words[w]))
    detail = f"gamma = {rep.gamma:.6f} +- {rep.stderr:.6f} (z = {z_gamma:+.2f}); worst word {worst} z = {z_words[worst]:+.2f}"
    report(4, ok, detail, time.perf_counter() - t, 30)


def test_criterion_5_martingale():
    t = time.perf_counter()
    rep = martingale_check(one_plus_two_strategy(), NetworkParams(q=0.4), 1_000_000, seed=SEED)
    a = rep.attacker
    detail = f"E[N'] = {a.observed:.6f}, a'E[tau] = {a.compensator:.6f}, diff = {a.discrepancy:+.2e}, 3se = {3 * a.stderr:.2e}"
    report(5, a.passed and rep.counting_identity, detail, time.perf_counter() - t, 60)


def test_criterion_6_no_daa_bound():
    t = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(6,)))
    strategies = [one_plus_two_strategy()] + [random_word_rule_strategy(rng, name=f"random-{i}") for i in range(20)]
    failures, worst = [], -math.inf
    for k, s in enumerate(strategies):
        for j, q in enumerate((0.2, 0.4)):
            rep = no_daa_bound_check(s, NetworkParams(q=q), 200_000, seed=SEED + 100 * k + j)
            worst = max(worst, (rep.ratio - rep.bound) / rep.stderr if rep.stderr > 0 else 0.0)
            if not rep.passed:
                failures.append((s.name, q))
    detail = f"{len(strategies) * 2} checks, failures {failures}, max (ratio - bound)/se = {worst:+.2f}"
    report(6, not failures, detail, time.perf_counter() - t, 60)


def test_criterion_7_longrun():
    t = time.perf_counter()
    kw = dict(n_epochs=50, warmup=10, seed=SEED, replications=LONGRUN_REPLICATIONS, workers=4)
    q = 0.45
    params = NetworkParams(q=q, n0=64)
    honest = simulate_longrun(honest_strategy(), params, Variant.STANDARD, **kw)
    std = simulate_longrun(one_plus_two_strategy(), params, Variant.STANDARD, **kw)
    orph = simulate_longrun(one_plus_two_strategy(), params, Variant.ORPHAN, **kw)
    target_c = exact_report(one_plus_two_strategy(), params, Variant.ORPHAN).gamma
    rel_a = honest.minutes_per_official / params.tau0 - 1
    rel_b = std.revenue_per_tau0 / 0.46647 - 1
    rel_c = orph.revenue_per_tau0 / target_c - 1
    ok_a = abs(rel_a) < 0.02
    ok_b = abs(rel_b) < 0.02 and std.revenue_per_tau0 > q
    ok_c = abs(rel_c) < 0.02 and orph.revenue_per_tau0 < q
    detail = (
        f"(a) {honest.minutes_per_official:.4f} min/block ({rel_a:+.2%}) {'ok' if ok_a else 'BAD'}; "
        f"(b) {std.revenue_per_tau0:.5f} vs 0.46647 ({rel_b:+.2%}) {'ok' if ok_b else 'BAD'}; "
        f"(c) {orph.revenue_per_tau0:.5f} vs {target_c:.5f} ({rel_c:+.2%}) {'ok' if ok_c else 'BAD'}"
    )
    report(7, ok_a and ok_b and ok_c, detail, time.perf_counter() - t, 300)


def test_criterion_8_three_block():
    t = time.perf_counter()
    best, gamma = best_three_block_strategy(0.45)
    ok = same_rules(best, one_plus_two_strategy()) and abs(gamma - closed_form_gamma_one_plus_two(0.45)) < 1e-12
    report(8, ok, f"maximiser is one-plus-two: {same_rules(best, one_plus_two_strategy())}, gamma = {gamma:.6f}", time.perf_counter() - t, 60)


def _csv_digest(sample):
    buf = io.StringIO()
    sample.write_csv(buf)
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()


def test_criterion_9_determinism():
    t = time.perf_counter()
    first, second = _criterion_4_sample(), _criterion_4_sample()
    same_bytes = _csv_digest(first) == _csv_digest(second)
    parallel = _criterion_4_sample(workers=4)
    same_summary = parallel.report == first.report
    detail = f"same-seed CSV identical: {same_bytes}; workers 1 vs 4 summaries identical: {same_summary}"
    report(9, same_bytes and same_summary, detail, time.perf_counter() - t, math.inf)


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    request.config.stash.setdefault(ACCEPTANCE_KEY, []).extend(RESULTS)


ACCEPTANCE_KEY = pytest.StashKey[list]()
