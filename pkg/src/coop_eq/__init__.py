"""Cooperative-optimization dynamics for finding equilibria of n-player games."""

from coop_eq.errors import (
    CapacityError,
    ConfigError,
    CoopEqError,
    InputError,
    NumericalError,
    StateError,
)
from coop_eq.hard import (
    HardConfig,
    HardResult,
    best_assignment,
    check_consensus,
    consensus_is_global_check,
    hard_step,
    run_hard,
)
from coop_eq.model import (
    AssignmentState,
    Domain,
    Flavor,
    Game,
    StrategyProfile,
    agent_payoff,
    expected_agent_payoff,
    global_utility,
    random_game,
    random_profile,
    uniform_profile,
)
from coop_eq.propagation import (
    PropagationMatrix,
    contraction_modulus,
    make_offdiagonal_w,
    make_uniform_w,
    validate_w,
)
from coop_eq.soft import (
    SoftConfig,
    SoftResult,
    gap_bound,
    nash_gap,
    run_soft,
    soft_step,
    to_strategy,
    verify_fixed_point,
)

__version__ = "0.1.0"
