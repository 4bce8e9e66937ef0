"""Brute-force reference computations.

Everything here walks the full joint action space in plain Python. Nothing
is shared with the engines' vectorized code on purpose, so agreement
between the two is evidence that both are right.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from coop_eq.errors import CapacityError, ConfigError
from coop_eq.model import AssignmentState, Domain, Game, StrategyProfile

MAX_PROFILES = 10**6
MAX_EXPONENT = 20.0


class _Tables:
    """Flat payoff lists with lexicographic indexing over each scope."""

    def __init__(self, game: Game):
        if game.n_profiles > MAX_PROFILES:
            raise CapacityError(
                f"{game.n_profiles} joint profiles exceed the oracle cap of {MAX_PROFILES}"
            )
        self.game = game
        self.flat = [t.reshape(-1).tolist() for t in game.tables]
        self.strides = []
        for scope in game.scopes:
            strides = []
            step = 1
            for v in reversed(scope):
                strides.append(step)
                step *= game.action_counts[v]
            self.strides.append(list(reversed(strides)))

    def payoff(self, i: int, x) -> float:
        k = 0
        for v, s in zip(self.game.scopes[i], self.strides[i]):
            k += x[v] * s
        return self.flat[i][k]

    def profiles(self):
        return itertools.product(*(range(m) for m in self.game.action_counts))


@dataclass
class NashReport:
    profiles: list[tuple[int, ...]] = field(default_factory=list)
    # Per profile and agent: smallest payoff loss over unilateral deviations
    # (inf when the agent has a single action).
    margins: list[tuple[float, ...]] = field(default_factory=list)


def enumerate_pure_nash(game: Game) -> NashReport:
    tab = _Tables(game)
    report = NashReport()
    for x in tab.profiles():
        margins = []
        stable = True
        for i in range(game.n):
            here = tab.payoff(i, x)
            margin = math.inf
            for a in range(game.action_counts[i]):
                if a == x[i]:
                    continue
                y = x[:i] + (a,) + x[i + 1:]
                margin = min(margin, here - tab.payoff(i, y))
            if margin < 0:
                stable = False
                break
            margins.append(margin)
        if stable:
            report.profiles.append(x)
            report.margins.append(tuple(margins))
    return report


def global_optimum(game: Game) -> tuple[list[tuple[int, ...]], float]:
    """All maximizers of the summed payoff, and the maximum."""
    tab = _Tables(game)
    best, best_set = -math.inf, []
    for x in tab.profiles():
        total = 0.0
        for i in range(game.n):
            total += tab.payoff(i, x)
        if total > best:
            best, best_set = total, [x]
        elif total == best:
            best_set.append(x)
    return best_set, best


def _check_scale(game: Game, hbar: float) -> None:
    if not hbar > 0:
        raise ConfigError(f"hbar must be positive, got {hbar}")
    for i, t in enumerate(game.tables):
        top = max(abs(v) for v in t.reshape(-1).tolist())
        if top / hbar > MAX_EXPONENT:
            raise CapacityError(
                f"|E_{i}|/hbar reaches {top / hbar:.3g}; direct summation is limited to {MAX_EXPONENT}"
            )


def brute_psi(game: Game, profile: StrategyProfile, hbar: float) -> AssignmentState:
    """Linear-domain Psi_i(a) = sum over x with x_i = a of u_i(x) prod_{j != i} p_j(x_j)."""
    _check_scale(game, hbar)
    tab = _Tables(game)
    probs = [p.tolist() for p in profile]
    psi = [[0.0] * m for m in game.action_counts]
    for x in tab.profiles():
        for i in range(game.n):
            weight = math.exp(tab.payoff(i, x) / hbar)
            for j in range(game.n):
                if j != i:
                    weight *= probs[j][x[j]]
            psi[i][x[i]] += weight
    return AssignmentState(tuple(psi), Domain.LINEAR)


def brute_hard_step(game: Game, state: AssignmentState, lam: float, w) -> AssignmentState:
    """Full enumeration of the max in the hard update, no decoupling."""
    tab = _Tables(game)
    w = [list(map(float, row)) for row in getattr(w, "matrix", w)]
    vals = [v.tolist() for v in state]
    lam = float(lam)
    out = [[-math.inf] * m for m in game.action_counts]
    for x in tab.profiles():
        for i in range(game.n):
            total = tab.payoff(i, x)
            for j in range(game.n):
                if j != i:
                    total = total + (lam * w[i][j]) * vals[j][x[j]]
            if total > out[i][x[i]]:
                out[i][x[i]] = total
    return AssignmentState(tuple(out), Domain.LINEAR)


@dataclass
class EpsilonNashReport:
    passed: list[bool]
    regret: list[float]

    @property
    def all_passed(self) -> bool:
        return all(self.passed)


def epsilon_nash_check(game: Game, profile: StrategyProfile, hbar: float,
                       epsilon: float) -> EpsilonNashReport:
    """Relative regret (best - expected) / best in exp(E_i/hbar) utility,
    against the other agents' mixed strategies."""
    psi = brute_psi(game, profile, hbar)
    passed, regrets = [], []
    for values, p in zip(psi, profile):
        values = values.tolist()
        best = max(values)
        expected = math.fsum(v * q for v, q in zip(values, p.tolist()))
        regret = max(0.0, (best - expected) / best)
        regrets.append(regret)
        passed.append(regret <= epsilon)
    return EpsilonNashReport(passed, regrets)
