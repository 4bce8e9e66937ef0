"""Max-sum iteration with cooperation strength ``lambda``.

Each agent maximizes its own payoff plus ``lambda * w[i, j]`` times the
previous value vectors of the other agents:

    Psi_i(x_i) <- max over the rest of [E_i(x) + lam * sum_{j != i} w_ij Psi_j(x_j)]

There is no (1 - lambda) damping on E_i, so the fixed point scales like
1 / (1 - lambda). Agents outside the payoff scope of ``i`` decouple from the
max and contribute the constant ``lam * w_ij * max Psi_j``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from coop_eq import oracle
from coop_eq.errors import ConfigError, InputError, NumericalError, StateError
from coop_eq.model import AssignmentState, Domain, Game, global_utility
from coop_eq.propagation import PropagationMatrix, check_w, contraction_modulus, resolve_w
from coop_eq.soft import map_agents

TIE_TOL = 1e-9


class ExperimentalScheduleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HardConfig:
    """``lam`` is a constant in [0, 1) or, experimentally, a per-iteration
    sequence (the last entry repeats once the sequence runs out)."""

    lam: float | Sequence[float] = 0.5
    w: object = None
    tol: float = 1e-9
    max_iters: int = 10000
    init: str = "zero"
    seed: int = 0
    spread: float = 10.0
    workers: int = 1
    strict_w: bool = False

    def __post_init__(self):
        if isinstance(self.lam, (int, float)):
            if not 0 <= self.lam < 1:
                raise ConfigError(f"constant lambda must lie in [0, 1), got {self.lam}")
        else:
            lams = tuple(float(v) for v in self.lam)
            if not lams or any(not v >= 0 for v in lams):
                raise ConfigError("lambda schedule must be a non-empty sequence of values >= 0")
            object.__setattr__(self, "lam", lams)
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be positive, got {self.max_iters}")
        if self.init not in ("zero", "random"):
            raise ConfigError(f"init must be 'zero' or 'random', got {self.init!r}")

    @property
    def constant(self) -> bool:
        return not isinstance(self.lam, tuple)

    def lam_at(self, t: int) -> float:
        """Lambda used to produce iterate ``t`` (1-based)."""
        if self.constant:
            return float(self.lam)
        return self.lam[min(t, len(self.lam)) - 1]

    def initial_state(self, game: Game) -> AssignmentState:
        if self.init == "random":
            return AssignmentState.random(game, self.seed, self.spread)
        return AssignmentState.zeros(game)


@dataclass
class HardIteration:
    iteration: int
    lam: float
    max_delta: float
    assignment: tuple[int, ...]
    ties: tuple[bool, ...]
    consensus: bool
    best_value: float


@dataclass
class HardResult:
    state: AssignmentState
    assignment: tuple[int, ...]
    ties: tuple[bool, ...]
    converged: bool
    config: HardConfig
    w: PropagationMatrix
    modulus: float | None
    trace: list[HardIteration] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def deltas(self) -> list[float]:
        return [it.max_delta for it in self.trace]

    @property
    def consensus(self) -> bool:
        return bool(self.trace) and self.trace[-1].consensus

    @property
    def ratios(self) -> list[float]:
        """delta(t+1) / delta(t) wherever delta(t) > 0."""
        d = self.deltas
        return [b / a for a, b in zip(d, d[1:]) if a > 0]

    def empirical_ratio(self, floor: float = 1e-12) -> float | None:
        """Last ratio whose denominator is above rounding noise."""
        d = self.deltas
        pairs = [(a, b) for a, b in zip(d, d[1:]) if a > floor]
        if not pairs:
            return None
        a, b = pairs[-1]
        return b / a


def _coefficients(i: int, lam: float, w: np.ndarray) -> list[tuple[int, float]]:
    return [(j, lam * w[i, j]) for j in range(w.shape[0]) if j != i]


def compromised_utility(game: Game, i: int, state: AssignmentState, lam: float,
                        w: np.ndarray) -> np.ndarray:
    """E_i plus the weighted neighbour values, over the scope of ``i``.

    Terms are added in ascending agent order. Out-of-scope agents add
    their decoupled maximum.
    """
    scope = game.scopes[i]
    acc = np.array(game.tables[i], dtype=float)
    for j, coef in _coefficients(i, lam, w):
        if j in scope:
            shape = [1] * len(scope)
            shape[scope.index(j)] = -1
            acc = acc + (coef * state[j]).reshape(shape)
        else:
            acc = acc + coef * state[j].max()
    return acc


def hard_step(game: Game, state_prev: AssignmentState, lam: float, w,
              workers: int = 1) -> AssignmentState:
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam}")
    w = np.asarray(getattr(w, "matrix", w), dtype=float)
    if w.shape != (game.n, game.n):
        raise InputError(f"propagation matrix shape {w.shape} does not match {game.n} agents")
    if tuple(v.size for v in state_prev) != game.action_counts:
        raise InputError("state shape does not match the game")

    def update(i: int) -> np.ndarray:
        acc = compromised_utility(game, i, state_prev, lam, w)
        own_axis = game.scopes[i].index(i)
        others = tuple(ax for ax in range(acc.ndim) if ax != own_axis)
        out = acc.max(axis=others) if others else acc
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite value for agent {i}", agent=i)
        return out

    return AssignmentState(tuple(map_agents(update, game.n, workers)), Domain.LINEAR)


def best_assignment(state: AssignmentState) -> tuple[tuple[int, ...], tuple[bool, ...]]:
    """Per-agent argmax, lowest index on ties, plus per-agent tie flags."""
    x, ties = [], []
    for v in state:
        best = int(np.argmax(v))
        x.append(best)
        ties.append(bool(np.count_nonzero(v == v[best]) > 1))
    return tuple(x), tuple(ties)


def check_consensus(game: Game, state_prev: AssignmentState, x_tilde: Sequence[int],
                    lam: float, w, tie_tol: float = TIE_TOL) -> tuple[list[bool], bool]:
    """Does ``x_tilde`` restricted to each scope maximize that agent's
    compromised utility (within ``tie_tol``)?"""
    x_tilde = game.check_assignment(x_tilde)
    w = np.asarray(getattr(w, "matrix", w), dtype=float)
    agrees = []
    for i in range(game.n):
        acc = compromised_utility(game, i, state_prev, lam, w)
        here = acc[tuple(x_tilde[v] for v in game.scopes[i])]
        agrees.append(bool(here >= acc.max() - tie_tol))
    return agrees, all(agrees)


def run_hard(game: Game, cfg: HardConfig) -> HardResult:
    """Iterate :func:`hard_step` until the sup-norm change is below ``cfg.tol``."""
    w = resolve_w(cfg.w, game.n)
    check_w(w, strict=cfg.strict_w)
    if not cfg.constant:
        warnings.warn("time-varying lambda schedules are experimental",
                      ExperimentalScheduleWarning, stacklevel=2)
    state = cfg.initial_state(game)
    modulus = contraction_modulus(w, cfg.lam) if cfg.constant else None
    trace = []
    converged = False
    x, ties = best_assignment(state)
    for t in range(1, cfg.max_iters + 1):
        lam = cfg.lam_at(t)
        try:
            new = hard_step(game, state, lam, w, cfg.workers)
        except NumericalError as exc:
            raise NumericalError(f"iteration {t}: {exc}", exc.agent, t) from exc
        delta = new.sup_distance(state)
        if not math.isfinite(delta):
            raise NumericalError(f"iteration {t}: non-finite change", None, t)
        x, ties = best_assignment(new)
        _, agree = check_consensus(game, state, x, lam, w)
        trace.append(HardIteration(t, lam, delta, x, ties, agree, global_utility(game, x)))
        state = new
        if delta < cfg.tol:
            converged = True
            break
    return HardResult(state, x, ties, converged, cfg, w, modulus, trace)


@dataclass
class GlobalCheckReport:
    consensus: bool
    assignment: tuple[int, ...]
    value: float
    is_pure_nash: bool | None = None
    is_global_optimum: bool | None = None
    optimum_value: float | None = None
    optimum_set: list[tuple[int, ...]] | None = None


def consensus_is_global_check(game: Game, result: HardResult) -> GlobalCheckReport:
    """Ask the oracle whether a converged consensus point is a pure Nash
    equilibrium and whether it maximizes the summed payoff."""
    if not result.converged:
        raise StateError("result did not converge")
    if not result.config.constant:
        raise StateError("global-optimum check needs a constant lambda")
    x = result.assignment
    report = GlobalCheckReport(result.consensus, x, global_utility(game, x))
    if report.consensus:
        nash = oracle.enumerate_pure_nash(game)
        best_set, best_value = oracle.global_optimum(game)
        report.is_pure_nash = x in nash.profiles
        report.is_global_optimum = x in best_set
        report.optimum_value = best_value
        report.optimum_set = best_set
    return report
