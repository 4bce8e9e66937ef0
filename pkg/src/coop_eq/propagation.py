"""Propagation matrices W that route assignment values between agents.

Entry ``w[i, j]`` is the weight agent ``i`` puts on agent ``j``'s values.
Columns must sum to one. Diagonal entries never enter the hard update (it
sums over j != i) but they still count toward the column sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.sparse.csgraph import connected_components

from coop_eq.errors import ConfigError, InputError

COLUMN_SUM_TOL = 1e-12


class PropagationWarning(UserWarning):
    """W is valid but reducible or periodic."""


@dataclass(frozen=True, eq=False)
class PropagationMatrix:
    """Nonnegative column-stochastic n x n matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        w = np.array(self.matrix, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"propagation matrix must be square, got shape {w.shape}")
        report = validate_w(w)
        if not report.nonnegative or not report.column_stochastic:
            raise ConfigError("invalid propagation matrix: " + "; ".join(report.failures))
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass
class ValidationReport:
    nonnegative: bool
    column_stochastic: bool
    irreducible: bool
    aperiodic: bool
    periods: list[int] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.nonnegative and self.column_stochastic and self.irreducible and self.aperiodic

    @property
    def structural_ok(self) -> bool:
        """The hard invariants: nonnegativity and unit column sums."""
        return self.nonnegative and self.column_stochastic


def make_uniform_w(n: int) -> PropagationMatrix:
    if n < 1:
        raise InputError(f"need at least one agent, got n={n}")
    return PropagationMatrix(np.full((n, n), 1.0 / n))


def make_offdiagonal_w(n: int) -> PropagationMatrix:
    if n < 2:
        raise InputError(f"off-diagonal propagation needs n >= 2, got n={n}")
    w = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(w, 0.0)
    return PropagationMatrix(w)


def resolve_w(spec, n: int) -> PropagationMatrix:
    """Turn ``None``, ``"uniform"``, ``"offdiag"`` or an array into a matrix."""
    if spec is None or (isinstance(spec, str) and spec == "uniform"):
        return make_uniform_w(n)
    if isinstance(spec, PropagationMatrix):
        w = spec
    elif isinstance(spec, str):
        if spec == "offdiag":
            return make_offdiagonal_w(n)
        raise ConfigError(f"unknown propagation matrix {spec!r}")
    else:
        w = PropagationMatrix(np.asarray(spec, dtype=float))
    if w.n != n:
        raise ConfigError(f"propagation matrix is {w.n}x{w.n}, game has {n} agents")
    return w


def _period(adj: np.ndarray, nodes: list[int]) -> int | None:
    """gcd of cycle lengths inside one strongly connected component."""
    members = set(nodes)
    level = {nodes[0]: 0}
    queue = [nodes[0]]
    g = 0
    for u in queue:
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in members:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g or None


def validate_w(w) -> ValidationReport:
    """Check nonnegativity, column sums, irreducibility and aperiodicity.

    The graph has an edge j -> i whenever ``w[i, j] > 0``. Aperiodicity
    requires every strongly connected component that contains a cycle to
    have period 1.
    """
    w = np.asarray(getattr(w, "matrix", w), dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InputError(f"propagation matrix must be square, got shape {w.shape}")
    failures = []
    finite = bool(np.all(np.isfinite(w)))
    nonneg = finite and bool(np.all(w >= 0))
    if not nonneg:
        failures.append("entries must be finite and nonnegative")
    col_sums = [math.fsum(w[:, j]) for j in range(w.shape[1])] if finite else []
    stochastic = finite and all(abs(s - 1.0) <= COLUMN_SUM_TOL for s in col_sums)
    if not stochastic:
        failures.append("every column must sum to 1")

    adj = (w.T > 0) if finite else np.zeros_like(w, dtype=bool)
    n_comp, labels = connected_components(adj.astype(np.int8), directed=True, connection="strong")
    irreducible = n_comp == 1
    if not irreducible:
        failures.append(f"reducible: {n_comp} strongly connected components")

    periods = []
    for c in range(n_comp):
        nodes = [int(v) for v in np.flatnonzero(labels == c)]
        p = _period(adj, nodes)
        if p is not None:
            periods.append(p)
    aperiodic = bool(periods) and reduce(max, periods) == 1
    if not aperiodic:
        failures.append(f"periodic: cycle-length gcd {periods}" if periods else "no cycles")
    return ValidationReport(nonneg, stochastic, irreducible, aperiodic, periods, failures)


def check_w(w: PropagationMatrix, strict: bool = False) -> ValidationReport:
    """Warn about (or with ``strict``, reject) reducible or periodic W."""
    report = validate_w(w)
    problems = [f for f in report.failures if f.startswith(("reducible", "periodic", "no cycles"))]
    if problems:
        msg = "propagation matrix " + "; ".join(problems)
        if strict:
            raise ConfigError(msg)
        warnings.warn(msg, PropagationWarning, stacklevel=2)
    return report


def contraction_modulus(w, lam: float) -> float:
    """lambda times the largest off-diagonal row sum of W.

    Upper bound on the sup-norm Lipschitz constant of one hard step; below
    one means the hard iteration is a contraction.
    """
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam}")
    w = np.asarray(getattr(w, "matrix", w), dtype=float)
    off = w.copy()
    np.fill_diagonal(off, 0.0)
    return float(lam * max(math.fsum(row) for row in off))
