"""Games, strategy profiles and assignment states.

Conventions used throughout the package:

* Agents and actions are 0-based in Python. Files and traces use 1-based
  indices; conversion happens only in :mod:`coop_eq.io`.
* Every payoff table is an ndarray with one axis per variable in the owner's
  scope, in ascending variable order. Flattening such a table in C order
  gives the lexicographic joint-profile layout with the lowest-numbered
  variable slowest-varying, which is the normative file layout.
* Payoffs are maximized. A stray sentence in the source material talks
  about minimizing E(x); every update rule maximizes, so we do too.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from coop_eq.errors import CapacityError, ConfigError, InputError, MalformedProfileError

MAX_TABLE_ENTRIES = 10**7
PROB_SUM_TOL = 1e-12


class Flavor(str, enum.Enum):
    NORMAL_FORM = "normal_form"
    FACTORED = "factored"


class Domain(str, enum.Enum):
    LOG = "log"
    LINEAR = "linear"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Game:
    """An n-agent game with one payoff table per agent.

    ``tables[i]`` has shape ``tuple(action_counts[j] for j in scopes[i])``.
    For normal-form games every scope is ``(0, ..., n-1)``.
    """

    action_counts: tuple[int, ...]
    scopes: tuple[tuple[int, ...], ...]
    tables: tuple[np.ndarray, ...]
    flavor: Flavor = Flavor.NORMAL_FORM
    player_names: tuple[str, ...] | None = None
    action_labels: tuple[tuple[str, ...], ...] | None = None
    # Propagation matrix request carried by a game file: "uniform", "offdiag",
    # an (n, n) array, or None.
    w: object = field(default=None, compare=False)

    def __post_init__(self):
        counts = tuple(int(m) for m in self.action_counts)
        n = len(counts)
        if n == 0:
            raise InputError("a game needs at least one agent")
        if any(m < 1 for m in counts):
            raise InputError(f"action counts must be positive, got {counts}")
        if len(self.scopes) != n or len(self.tables) != n:
            raise InputError("need exactly one scope and one table per agent")
        scopes = []
        tables = []
        for i, (scope, table) in enumerate(zip(self.scopes, self.tables)):
            scope = tuple(int(v) for v in scope)
            if i not in scope:
                raise InputError(f"agent {i} must belong to its own scope {scope}")
            if any(b <= a for a, b in zip(scope, scope[1:])):
                raise InputError(f"scope of agent {i} must be strictly increasing: {scope}")
            if scope[0] < 0 or scope[-1] >= n:
                raise InputError(f"scope of agent {i} out of range: {scope}")
            shape = tuple(counts[v] for v in scope)
            size = math.prod(shape)
            if size > MAX_TABLE_ENTRIES:
                raise CapacityError(
                    f"table of agent {i} has {size} entries, cap is {MAX_TABLE_ENTRIES}"
                )
            arr = np.asarray(table, dtype=float)
            if arr.size != size:
                raise InputError(
                    f"table of agent {i} has {arr.size} entries, expected {size}"
                )
            arr = arr.reshape(shape)
            if not np.all(np.isfinite(arr)):
                raise InputError(f"table of agent {i} contains non-finite values")
            scopes.append(scope)
            tables.append(_readonly(arr))
        if self.flavor == Flavor.NORMAL_FORM and any(s != tuple(range(n)) for s in scopes):
            raise InputError("normal-form games need full scopes")
        object.__setattr__(self, "action_counts", counts)
        object.__setattr__(self, "scopes", tuple(scopes))
        object.__setattr__(self, "tables", tuple(tables))
        object.__setattr__(self, "flavor", Flavor(self.flavor))

    @classmethod
    def normal_form(cls, payoffs: Sequence[np.ndarray], **kwargs) -> "Game":
        """Build a normal-form game from per-agent tables.

        Each entry of ``payoffs`` may be an n-dimensional array or a flat
        array in lexicographic order (agent 0 slowest).
        """
        first = np.asarray(payoffs[0], dtype=float)
        counts = kwargs.pop("action_counts", None)
        if counts is None:
            if first.ndim != len(payoffs):
                raise InputError("pass action_counts when tables are flat")
            counts = first.shape
        full = tuple(range(len(counts)))
        return cls(tuple(counts), (full,) * len(counts), tuple(payoffs),
                   Flavor.NORMAL_FORM, **kwargs)

    @property
    def n(self) -> int:
        return len(self.action_counts)

    @property
    def n_profiles(self) -> int:
        return math.prod(self.action_counts)

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.action_counts == other.action_counts
            and self.scopes == other.scopes
            and self.flavor == other.flavor
            and self.player_names == other.player_names
            and self.action_labels == other.action_labels
            and all(np.array_equal(a, b) for a, b in zip(self.tables, other.tables))
            and _w_equal(self.w, other.w)
        )

    __hash__ = None

    def check_assignment(self, x: Sequence[int]) -> tuple[int, ...]:
        x = tuple(int(a) for a in x)
        if len(x) != self.n:
            raise InputError(f"assignment has {len(x)} entries, game has {self.n} agents")
        for i, (a, m) in enumerate(zip(x, self.action_counts)):
            if not 0 <= a < m:
                raise InputError(f"action {a} of agent {i} out of range [0, {m})")
        return x

    def check_agent(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise InputError(f"agent index {i} out of range [0, {self.n})")
        return i


def _w_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and np.array_equal(a, b)
    return a == b


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """One probability vector per agent."""

    probs: tuple[np.ndarray, ...]

    def __post_init__(self):
        probs = tuple(_readonly(p) for p in self.probs)
        for i, p in enumerate(probs):
            if p.ndim != 1 or p.size == 0:
                raise InputError(f"strategy of agent {i} must be a non-empty vector")
            if not np.all(np.isfinite(p)) or np.any(p < 0):
                raise MalformedProfileError(f"strategy of agent {i} has negative or non-finite entries")
            if not np.any(p > 0):
                raise MalformedProfileError(f"strategy of agent {i} is identically zero")
            if abs(math.fsum(p) - 1.0) > PROB_SUM_TOL:
                raise MalformedProfileError(
                    f"strategy of agent {i} sums to {math.fsum(p)!r}, not 1"
                )
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def __iter__(self):
        return iter(self.probs)

    def sup_distance(self, other: "StrategyProfile") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.probs, other.probs))

    def check_against(self, game: Game) -> None:
        shape = tuple(p.size for p in self.probs)
        if shape != game.action_counts:
            raise InputError(f"profile shape {shape} does not match game {game.action_counts}")

    @classmethod
    def point_mass(cls, game: Game, x: Sequence[int]) -> "StrategyProfile":
        x = game.check_assignment(x)
        probs = []
        for a, m in zip(x, game.action_counts):
            p = np.zeros(m)
            p[a] = 1.0
            probs.append(p)
        return cls(tuple(probs))


@dataclass(frozen=True, eq=False)
class AssignmentState:
    """Per-agent value vectors Psi_i.

    ``LOG`` states (soft engine) store log Psi_i; ``LINEAR`` states (hard
    engine) store Psi_i itself.
    """

    values: tuple[np.ndarray, ...]
    domain: Domain

    def __post_init__(self):
        values = tuple(_readonly(v) for v in self.values)
        for i, v in enumerate(values):
            if v.ndim != 1 or v.size == 0:
                raise InputError(f"state of agent {i} must be a non-empty vector")
            if not np.all(np.isfinite(v)):
                raise InputError(f"state of agent {i} has non-finite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", Domain(self.domain))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def sup_distance(self, other: "AssignmentState") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.values, other.values))

    @classmethod
    def zeros(cls, game: Game, domain: Domain = Domain.LINEAR) -> "AssignmentState":
        return cls(tuple(np.zeros(m) for m in game.action_counts), domain)

    @classmethod
    def random(cls, game: Game, seed: int, spread: float = 10.0,
               domain: Domain = Domain.LINEAR) -> "AssignmentState":
        """Entries drawn uniformly from ``[-spread, spread]``."""
        rng = np.random.default_rng(seed)
        return cls(tuple(rng.uniform(-spread, spread, m) for m in game.action_counts), domain)


def agent_payoff(game: Game, i: int, x: Sequence[int]) -> float:
    game.check_agent(i)
    x = game.check_assignment(x)
    return float(game.tables[i][tuple(x[v] for v in game.scopes[i])])


def global_utility(game: Game, x: Sequence[int]) -> float:
    """Sum of every agent's payoff at the pure assignment ``x``.

    Summed left to right starting from 0.0, so it equals the sum of
    :func:`agent_payoff` values in agent order exactly.
    """
    x = game.check_assignment(x)
    total = 0.0
    for i in range(game.n):
        total += agent_payoff(game, i, x)
    return total


def scope_log_weights(game: Game, i: int, profile: StrategyProfile, hbar: float) -> np.ndarray:
    """E_i/hbar plus log p_j of every other in-scope agent, over the scope of ``i``.

    Agents outside the scope are dropped: their probabilities sum to one.
    """
    scope = game.scopes[i]
    acc = game.tables[i] / hbar
    with np.errstate(divide="ignore"):
        for axis, j in enumerate(scope):
            if j == i:
                continue
            shape = [1] * len(scope)
            shape[axis] = -1
            acc = acc + np.log(profile[j]).reshape(shape)
    return acc


def log_expected_agent_payoff(game: Game, i: int, profile: StrategyProfile, hbar: float) -> float:
    """log of sum_x u_i(x) prod_j p_j(x_j) with u_i = exp(E_i / hbar)."""
    if not hbar > 0:
        raise ConfigError(f"hbar must be positive, got {hbar}")
    game.check_agent(i)
    profile.check_against(game)
    acc = scope_log_weights(game, i, profile, hbar)
    own_axis = game.scopes[i].index(i)
    with np.errstate(divide="ignore"):
        shape = [1] * acc.ndim
        shape[own_axis] = -1
        acc = acc + np.log(profile[i]).reshape(shape)
    return float(logsumexp(acc))


def expected_agent_payoff(game: Game, i: int, profile: StrategyProfile, hbar: float,
                          log: bool = False) -> float:
    """Expected utility exp(E_i/hbar) of agent ``i`` under ``profile``.

    With ``log=True`` the natural log is returned instead, which never
    overflows. The linear value raises :class:`OverflowError` when it
    exceeds the float range.
    """
    value = log_expected_agent_payoff(game, i, profile, hbar)
    if log:
        return value
    return math.exp(value)


def uniform_profile(game: Game) -> StrategyProfile:
    return StrategyProfile(tuple(np.full(m, 1.0 / m) for m in game.action_counts))


def random_profile(game: Game, seed: int) -> StrategyProfile:
    """Interior point of each simplex, flat Dirichlet draws."""
    rng = np.random.default_rng(seed)
    probs = []
    for m in game.action_counts:
        p = rng.dirichlet(np.ones(m))
        p = np.maximum(p, np.finfo(float).tiny)
        probs.append(p / p.sum())
    return StrategyProfile(tuple(probs))


def split_objective(table: np.ndarray, n_agents: int | None = None) -> Game:
    """Split one global objective E into n equal shares E/n over full scopes."""
    table = np.asarray(table, dtype=float)
    n = table.ndim if n_agents is None else n_agents
    if table.ndim != n:
        raise InputError("objective table needs one axis per agent")
    share = table / n
    return Game(table.shape, (tuple(range(n)),) * n, (share,) * n, Flavor.FACTORED)


def permute_agents(game: Game, perm: Sequence[int]) -> Game:
    """Relabel agents so that new agent ``k`` is old agent ``perm[k]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(game.n)):
        raise InputError(f"not a permutation of {game.n} agents: {perm}")
    inverse = {old: new for new, old in enumerate(perm)}
    counts = tuple(game.action_counts[p] for p in perm)
    scopes, tables = [], []
    for old in perm:
        new_vars = [inverse[v] for v in game.scopes[old]]
        order = np.argsort(new_vars)
        scopes.append(tuple(sorted(new_vars)))
        tables.append(np.transpose(game.tables[old], order))
    names = None if game.player_names is None else tuple(game.player_names[p] for p in perm)
    labels = None if game.action_labels is None else tuple(game.action_labels[p] for p in perm)
    w = game.w
    if isinstance(w, np.ndarray):
        w = w[np.ix_(perm, perm)]
    return Game(counts, tuple(scopes), tuple(tables), game.flavor, names, labels, w)


def random_game(n: int | Sequence[int], actions: int | Sequence[int] | None = None,
                seed: int = 0, low: float = 0.0, high: float = 1.0) -> Game:
    """Normal-form game with payoffs drawn uniformly from ``[low, high)``."""
    if actions is None:
        counts = tuple(int(m) for m in n)
    elif isinstance(actions, int):
        counts = (actions,) * int(n)
    else:
        counts = tuple(int(m) for m in actions)
    rng = np.random.default_rng(seed)
    return Game.normal_form([rng.uniform(low, high, counts) for _ in counts])
