"""Soft-decision iteration with selfishness ``alpha`` and temperature ``hbar``.

Each agent scores its actions by expected exponentiated payoff against the
other agents' previous mixed strategies, then sets its new strategy
proportional to that score raised to the power ``alpha``. Scores are kept
in the log domain because exp(E/hbar) overflows for small ``hbar``, and the
strategy only depends on scores up to scale anyway.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from coop_eq.errors import ConfigError, InputError, MalformedProfileError, NumericalError
from coop_eq.model import (
    AssignmentState,
    Domain,
    Game,
    StrategyProfile,
    random_profile,
    scope_log_weights,
    uniform_profile,
)


@dataclass(frozen=True)
class SoftConfig:
    alpha: float
    hbar: float = 1.0
    tol: float = 1e-10
    max_iters: int = 10000
    init: str = "uniform"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.hbar > 0:
            raise ConfigError(f"hbar must be positive, got {self.hbar}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be positive, got {self.max_iters}")
        if self.init not in ("uniform", "random"):
            raise ConfigError(f"init must be 'uniform' or 'random', got {self.init!r}")

    def initial_profile(self, game: Game) -> StrategyProfile:
        if self.init == "random":
            return random_profile(game, self.seed)
        return uniform_profile(game)


@dataclass
class SoftIteration:
    iteration: int
    max_delta: float
    gaps: np.ndarray
    bounds: np.ndarray | None
    bound_ok: bool | None
    profile: StrategyProfile

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())


@dataclass
class SoftResult:
    state: AssignmentState
    profile: StrategyProfile
    converged: bool
    trace: list[SoftIteration] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)


def map_agents(fn: Callable[[int], np.ndarray], n: int, workers: int = 1) -> list:
    """Run ``fn`` for every agent, optionally on a thread pool.

    Agents only read the previous iterate, so the schedule does not change
    any value.
    """
    if workers <= 1 or n == 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def soft_step(game: Game, profile_prev: StrategyProfile, hbar: float,
              workers: int = 1) -> AssignmentState:
    """One update of every agent's log score from the previous profile."""
    if not hbar > 0:
        raise ConfigError(f"hbar must be positive, got {hbar}")
    profile_prev.check_against(game)
    for j, p in enumerate(profile_prev):
        if not np.any(p > 0):
            raise MalformedProfileError(f"strategy of agent {j} has no positive entry")

    def update(i: int) -> np.ndarray:
        acc = scope_log_weights(game, i, profile_prev, hbar)
        own_axis = game.scopes[i].index(i)
        others = tuple(ax for ax in range(acc.ndim) if ax != own_axis)
        out = np.array(acc, dtype=float) if not others else logsumexp(acc, axis=others)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite log score for agent {i}", agent=i)
        return out

    return AssignmentState(tuple(map_agents(update, game.n, workers)), Domain.LOG)


def to_strategy(state: AssignmentState, alpha: float) -> StrategyProfile:
    """Normalize Psi_i ** alpha for every agent.

    ``alpha == 0`` is accepted as a diagnostic and yields uniform strategies.
    """
    if alpha < 0:
        raise ConfigError(f"alpha must be nonnegative, got {alpha}")
    if state.domain != Domain.LOG:
        raise InputError("to_strategy expects a log-domain state")
    probs = []
    for logpsi in state:
        z = alpha * logpsi
        p = np.exp(z - logsumexp(z))
        probs.append(p / p.sum())
    return StrategyProfile(tuple(probs))


def nash_gap(state: AssignmentState, profile: StrategyProfile) -> np.ndarray:
    """Relative gap 1 - E_p[Psi_i] / max Psi_i for every agent.

    Computed as sum_a p(a) * (1 - Psi(a)/max Psi), a sum of nonnegative
    terms, so the result is never negative.
    """
    if len(state) != len(profile):
        raise InputError("state and profile have different agent counts")
    gaps = np.empty(len(state))
    for i, (logpsi, p) in enumerate(zip(state, profile)):
        if logpsi.shape != p.shape:
            raise InputError(f"agent {i}: state and profile sizes differ")
        if state.domain == Domain.LOG:
            shortfall = -np.expm1(logpsi - logpsi.max())
        else:
            shortfall = 1.0 - logpsi / logpsi.max()
        gaps[i] = min(1.0, math.fsum(p * shortfall))
    return gaps


def gap_bound(m_i: int, alpha: float) -> float:
    """Upper bound (m_i - 1) / (e * alpha) on the relative gap, for alpha >= 1."""
    if alpha < 1:
        raise ConfigError(f"the gap bound needs alpha >= 1, got {alpha}")
    if m_i < 1:
        raise InputError(f"action count must be positive, got {m_i}")
    return (m_i - 1) / (math.e * alpha)


def bound_holds(gaps: np.ndarray, bounds: np.ndarray) -> bool:
    """0 <= gap < bound for every agent; single-action agents need gap == 0."""
    return bool(np.all((gaps >= 0) & ((gaps < bounds) | ((bounds == 0) & (gaps == 0)))))


def run_soft(game: Game, cfg: SoftConfig) -> SoftResult:
    """Jacobi iteration of :func:`soft_step` and :func:`to_strategy`.

    Stops when the sup-norm change of the profile drops below ``cfg.tol``.
    """
    profile = cfg.initial_profile(game)
    bounds = None
    if cfg.alpha >= 1:
        bounds = np.array([gap_bound(m, cfg.alpha) for m in game.action_counts])
    trace = []
    state = None
    converged = False
    for t in range(1, cfg.max_iters + 1):
        try:
            state = soft_step(game, profile, cfg.hbar, cfg.workers)
        except NumericalError as exc:
            raise NumericalError(f"iteration {t}: {exc}", exc.agent, t) from exc
        new_profile = to_strategy(state, cfg.alpha)
        delta = new_profile.sup_distance(profile)
        gaps = nash_gap(state, new_profile)
        ok = bound_holds(gaps, bounds) if bounds is not None else None
        trace.append(SoftIteration(t, delta, gaps, bounds, ok, new_profile))
        profile = new_profile
        if delta < cfg.tol:
            converged = True
            break
    return SoftResult(state, profile, converged, trace)


def verify_fixed_point(game: Game, state: AssignmentState, cfg: SoftConfig) -> float:
    """Sup-norm change in strategy space after one more soft update.

    A value at or below the caller's tolerance certifies an approximate
    fixed point.
    """
    profile = to_strategy(state, cfg.alpha)
    again = to_strategy(soft_step(game, profile, cfg.hbar), cfg.alpha)
    return again.sup_distance(profile)
