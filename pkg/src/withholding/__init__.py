"""Block-withholding profitability under standard and orphan-aware difficulty adjustment."""

from .analytic import (
    best_three_block_strategy,
    closed_form_gamma_one_plus_two,
    enumerate_cycles,
    expectations,
    exact_report,
    threshold,
    verify_dominance,
)
from .difficulty import DifficultyState, network_rate, retarget_general, retarget_orphan, retarget_standard
from .model import (
    CycleRecord,
    NetworkParams,
    ParamError,
    ProfitabilityReport,
    Resolution,
    Variant,
    check_accounting,
    make_record,
    validate_params,
)
from .simulator import martingale_check, no_daa_bound_check, simulate_cycles, simulate_longrun
from .strategies import (
    Decision,
    StrategyError,
    StrategySpec,
    honest_strategy,
    one_plus_two_strategy,
    run_cycle,
    word_rule_strategy,
)

__version__ = "0.1.0"
