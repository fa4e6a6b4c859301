"""Command-line front end.

Commands: ``analytic``, ``threshold``, ``simulate``, ``sweep``. Options can
also come from a flat ``key=value`` file given with ``--config``; flags on
the command line win over file values.

Exit codes: 0 ok, 2 configuration error, 3 property violation.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analytic
from .model import NetworkParams, ParamError, Variant
from .output import summary_record, write_jsonl, write_rows
from .simulator import (
    DEFAULT_SEED,
    martingale_check,
    no_daa_bound_check,
    simulate_cycles,
    simulate_longrun,
)
from .strategies import StrategyError, get_strategy

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    strategy: str = "one-plus-two"
    q: float | None = None
    q_grid: str | None = None
    variant: str = "standard"
    x: float = 0.0
    cycles: int = 100_000
    epochs: int = 50
    warmup: int = 10
    replications: int = 1
    workers: int = 1
    seed: int = DEFAULT_SEED
    n0: int = 2016
    tau0: float = 10.0
    output: str = "-"
    format: str = "csv"
    records: str | None = None
    epoch_log: str | None = None
    longrun: bool = False
    martingale: bool = False
    no_daa_bound: bool = False

    def grid(self) -> list[float]:
        if self.q_grid:
            values = parse_grid(self.q_grid)
        elif self.q is not None:
            values = [float(self.q)]
        else:
            raise ConfigError("give --q or --q-grid")
        if any(not 0.0 < v < 1.0 for v in values):
            raise ConfigError("q values must lie in (0, 1)")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("q grid must be strictly increasing")
        return values

    def params(self, q: float) -> NetworkParams:
        try:
            return NetworkParams(q=q, tau0=self.tau0, n0=self.n0, orphan_reward_x=self.x)
        except ParamError as exc:
            raise ConfigError(str(exc)) from None

    def variant_enum(self) -> Variant:
        try:
            return Variant(self.variant)
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}") from None


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            n = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad q grid {text!r}: {exc}") from None


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value: str):
    kind = _TYPES[key]
    if value.strip().lower() in ("", "none") and "None" in kind:
        return None
    try:
        if kind.startswith("bool"):
            low = value.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(value)
            return low in ("1", "true", "yes")
        if kind.startswith("int"):
            return int(value)
        if kind.startswith("float"):
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value.strip()


def read_config_file(path) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--strategy", help="honest, one-plus-two, or a word-rule CSV file")
    common.add_argument("--q", type=float, help="attacker hashrate share")
    common.add_argument("--q-grid", dest="q_grid", help="start:stop:step or comma list")
    common.add_argument("--variant", choices=[v.value for v in Variant])
    common.add_argument("--x", type=float, help="orphan reward fraction")
    common.add_argument("--n0", type=int)
    common.add_argument("--tau0", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o", help="output file ('-' for stdout)")
    common.add_argument("--format", choices=["csv", "jsonl"])

    parser = argparse.ArgumentParser(prog="withholding", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="exact expectations over a q grid")
    sub.add_parser("threshold", parents=[common], help="hashrate share where the strategy starts to pay")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo runs", argument_default=argparse.SUPPRESS)
    sim.add_argument("--cycles", type=int)
    sim.add_argument("--longrun", action="store_true")
    sim.add_argument("--martingale", action="store_true")
    sim.add_argument("--no-daa-bound", dest="no_daa_bound", action="store_true")
    sim.add_argument("--epochs", type=int)
    sim.add_argument("--warmup", type=int)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--records", help="write per-cycle CSV here")
    sim.add_argument("--epoch-log", dest="epoch_log", help="write per-epoch CSV here")
    sw = sub.add_parser(
        "sweep", parents=[common], help="Monte Carlo against exact values over a q grid", argument_default=argparse.SUPPRESS
    )
    sw.add_argument("--cycles", type=int)
    sw.add_argument("--workers", type=int)
    return parser


def build_config(ns: argparse.Namespace) -> ExperimentConfig:
    values = {}
    given = vars(ns).copy()
    given.pop("command", None)
    path = given.pop("config", None)
    if path:
        values.update(read_config_file(path))
    values.update(given)
    return ExperimentConfig(**values)


@contextlib.contextmanager
def _open_out(target):
    if target in (None, "-"):
        yield sys.stdout
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def _emit_summary(cfg: ExperimentConfig, record: dict) -> None:
    with _open_out(cfg.output) as fh:
        if cfg.format == "jsonl":
            write_jsonl(fh, [record])
        else:
            keys = sorted(record)
            write_rows(fh, keys, [record])


def cmd_analytic(cfg: ExperimentConfig) -> int:
    strategy = _strategy(cfg)
    variant = cfg.variant_enum()
    grid = cfg.grid()
    for q in grid:
        cfg.params(q)
    rows = analytic.sweep(strategy, grid, variant, x=cfg.x, tau0=cfg.tau0)
    with _open_out(cfg.output) as fh:
        if cfg.format == "jsonl":
            write_jsonl(fh, rows)
        else:
            write_rows(fh, analytic.SWEEP_COLUMNS, rows)
    bad = [
        r["q"]
        for r in rows
        if r["margin_modified"] > analytic.ZERO_TOL
        or (r["gamma_formula"] is not None and abs(r["gamma_exact"] - r["gamma_formula"]) > 1e-12)
    ]
    if bad:
        print(f"property violation at q={bad}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_threshold(cfg: ExperimentConfig) -> int:
    strategy = _strategy(cfg)
    cfg.params(0.5)
    rep = analytic.threshold(strategy, cfg.variant_enum(), x=cfg.x, tau0=cfg.tau0)
    with _open_out(cfg.output) as fh:
        if cfg.format == "jsonl":
            write_jsonl(fh, [summary_record(rep)])
        else:
            fh.write(str(rep) + "\n")
    return EXIT_OK


def _single_q(cfg: ExperimentConfig) -> float:
    grid = cfg.grid()
    if len(grid) != 1:
        raise ConfigError("simulate takes a single --q")
    return grid[0]


def cmd_simulate(cfg: ExperimentConfig) -> int:
    strategy = _strategy(cfg)
    variant = cfg.variant_enum()
    params = cfg.params(_single_q(cfg))
    if cfg.cycles < 1 or cfg.workers < 1 or cfg.replications < 1:
        raise ConfigError("cycles, workers and replications must be positive")
    modes = [m for m in ("longrun", "martingale", "no_daa_bound") if getattr(cfg, m)]
    if len(modes) > 1:
        raise ConfigError("choose at most one of --longrun, --martingale, --no-daa-bound")
    mode = modes[0] if modes else "cycles"
    base = {"mode": mode, "strategy": strategy.name, "q": params.q, "seed": cfg.seed}

    if mode == "longrun":
        if not cfg.epochs > cfg.warmup >= 1:
            raise ConfigError("need epochs > warmup >= 1")
        res = simulate_longrun(strategy, params, variant, cfg.epochs, cfg.warmup, cfg.seed, cfg.replications, cfg.workers)
        if cfg.epoch_log:
            with open(cfg.epoch_log, "w", newline="") as fh:
                cols = ("epoch", "delta", "official", "orphans", "elapsed_minutes")
                if cfg.replications > 1:
                    cols = ("replication",) + cols
                write_rows(fh, cols, res.epochs)
        _emit_summary(cfg, summary_record(res, **base))
        return EXIT_OK

    if mode == "martingale":
        rep = martingale_check(strategy, params, cfg.cycles, cfg.seed, cfg.workers)
        rec = dict(
            base,
            n_cycles=rep.n_cycles,
            attacker_observed=rep.attacker.observed,
            attacker_compensator=rep.attacker.compensator,
            attacker_stderr=rep.attacker.stderr,
            honest_observed=rep.honest.observed,
            honest_compensator=rep.honest.compensator,
            honest_stderr=rep.honest.stderr,
            counting_identity=rep.counting_identity,
            passed=rep.passed,
        )
        _emit_summary(cfg, rec)
        return EXIT_OK if rep.passed else EXIT_VIOLATION

    if mode == "no_daa_bound":
        rep = no_daa_bound_check(strategy, params, cfg.cycles, cfg.seed, cfg.workers)
        _emit_summary(cfg, summary_record(rep, passed=rep.passed, **base))
        return EXIT_OK if rep.passed else EXIT_VIOLATION

    sample = simulate_cycles(strategy, params, cfg.cycles, cfg.seed, variant, workers=cfg.workers)
    if cfg.records:
        with open(cfg.records, "w", newline="") as fh:
            sample.write_csv(fh)
    exact = analytic.exact_report(strategy, params, variant)
    rec = summary_record(sample.report, **base, gamma_exact=exact.gamma)
    _emit_summary(cfg, rec)
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    strategy = _strategy(cfg)
    variant = cfg.variant_enum()
    rows = []
    for i, q in enumerate(cfg.grid()):
        params = cfg.params(q)
        seed_i = int(np.random.SeedSequence(cfg.seed, spawn_key=(2, i)).generate_state(1)[0])
        rep = simulate_cycles(strategy, params, cfg.cycles, seed_i, variant, workers=cfg.workers).report
        exact = analytic.exact_report(strategy, params, variant)
        rows.append(
            {
                "q": q,
                "gamma_exact": exact.gamma,
                "gamma_mc": rep.gamma,
                "stderr": rep.stderr,
                "z": (rep.gamma - exact.gamma) / rep.stderr if rep.stderr else 0.0,
                "e_g": rep.e_g,
                "e_h": rep.e_h,
                "e_d": rep.e_d,
                "seed": seed_i,
            }
        )
    with _open_out(cfg.output) as fh:
        if cfg.format == "jsonl":
            write_jsonl(fh, rows)
        else:
            write_rows(fh, ("q", "gamma_exact", "gamma_mc", "stderr", "z", "e_g", "e_h", "e_d", "seed"), rows)
    return EXIT_OK


def _strategy(cfg: ExperimentConfig):
    try:
        return get_strategy(cfg.strategy)
    except (StrategyError, OSError) as exc:
        raise ConfigError(str(exc)) from None


COMMANDS = {"analytic": cmd_analytic, "threshold": cmd_threshold, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
