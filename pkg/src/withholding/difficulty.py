"""Difficulty retargeting rules.

Difficulty is a dimensionless multiple of the reference difficulty set
at simulation start (``delta_ref = 1``). Retargets are not clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

from .model import NetworkParams

EPOCH_LOG_COLUMNS = ("epoch", "delta", "official", "orphans", "elapsed_minutes")


class DifficultyError(ValueError):
    pass


@dataclass(frozen=True)
class DifficultyState:
    delta: float = 1.0
    official_in_epoch: int = 0
    orphans_in_epoch: int = 0
    epoch_elapsed: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise DifficultyError(f"difficulty must be positive: {self.delta!r}")

    def advance(self, official: int, orphans: int, minutes: float) -> "DifficultyState":
        return replace(
            self,
            official_in_epoch=self.official_in_epoch + official,
            orphans_in_epoch=self.orphans_in_epoch + orphans,
            epoch_elapsed=self.epoch_elapsed + minutes,
        )

    def restart(self, delta: float) -> "DifficultyState":
        return DifficultyState(delta=delta)


def _require_epoch(state: DifficultyState, n0: int) -> None:
    if state.official_in_epoch != n0:
        raise DifficultyError(f"retarget requested with {state.official_in_epoch} of {n0} official blocks")
    if not state.epoch_elapsed > 0:
        raise DifficultyError("epoch elapsed time must be positive")


def retarget_general(state: DifficultyState, d_progress: float, tau0: float) -> float:
    """New difficulty ``delta * d_progress * tau0 / T`` for any difficulty function."""
    if not d_progress > 0:
        raise DifficultyError(f"difficulty-function progress must be positive: {d_progress!r}")
    if not state.epoch_elapsed > 0:
        raise DifficultyError("epoch elapsed time must be positive")
    return state.delta * (d_progress * tau0) / state.epoch_elapsed


def retarget_standard(state: DifficultyState, n0: int, tau0: float) -> float:
    """Bitcoin's rule: only the ``n0`` official blocks of the epoch count."""
    _require_epoch(state, n0)
    return retarget_general(state, n0, tau0)


def retarget_orphan(state: DifficultyState, n0: int, tau0: float) -> float:
    """Orphan-aware rule: reported orphans count alongside official blocks."""
    _require_epoch(state, n0)
    return retarget_general(state, n0 + state.orphans_in_epoch, tau0)


class Rates(NamedTuple):
    total: float
    honest: float
    attacker: float


def network_rate(params: NetworkParams, delta: float, delta_ref: float = 1.0) -> Rates:
    """Block discovery rates (blocks per minute) at difficulty ``delta``.

    Total hash power is fixed, so the total rate is ``1/tau0`` at the
    reference difficulty and scales as ``delta_ref / delta``.
    """
    if not (delta > 0 and delta_ref > 0):
        raise DifficultyError("difficulties must be positive")
    total = (1.0 / params.tau0) * (delta_ref / delta)
    return Rates(total, params.p * total, params.q * total)
