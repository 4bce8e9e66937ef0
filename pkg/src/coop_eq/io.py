"""Game files (JSON) and trace files (CSV).

Game file layout, with 1-based indices throughout::

    {
      "kind": "normal_form",
      "players": [{"name": "row", "actions": ["C", "D"]},
                  {"name": "col", "actions": ["C", "D"]}],
      "payoffs": [[3, 0, 5, 1],      # row player
                  [3, 5, 0, 1]],     # column player
      "w": "uniform"                 # optional: "uniform" | "offdiag" | n x n rows
    }

Payoff arrays are flattened lexicographically with player 1 slowest, so for
the 2x2 case above the order is (C,C), (C,D), (D,C), (D,D).

Factored games replace ``payoffs`` with one sub-objective per player::

    "subobjectives": [{"owner": 1, "scope": [1, 2], "table": [...]}, ...]

where ``table`` is flattened the same way over ``scope`` only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from coop_eq.errors import (
    CapacityError,
    MalformedJSONError,
    NonFiniteError,
    ShapeError,
)
from coop_eq.model import MAX_TABLE_ENTRIES, Flavor, Game, global_utility

TRACE_HEADER = ["iter", "engine", "max_delta", "max_nash_gap", "bound_max",
                "consensus", "best_value", "best_assignment"]


def _reject_constant(name):
    raise NonFiniteError(f"non-finite literal {name} is not allowed")


def _as_list(value, path):
    if not isinstance(value, list):
        raise ShapeError("expected an array", path)
    return value


def _as_int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ShapeError("expected an integer", path)
    return value


def _numbers(values, expected, path) -> np.ndarray:
    values = _as_list(values, path)
    if len(values) != expected:
        raise ShapeError(f"has {len(values)} entries, expected {expected}", path)
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ShapeError("expected a number", f"{path}[{k}]")
        try:
            finite = math.isfinite(v)
        except OverflowError:
            finite = False
        if not finite:
            raise NonFiniteError("value is not finite", f"{path}[{k}]")
    return np.array(values, dtype=float)


def _check_size(size, path):
    if size > MAX_TABLE_ENTRIES:
        raise CapacityError(f"{path}: table needs {size} entries, cap is {MAX_TABLE_ENTRIES}")


def parse_game(text: bytes | str) -> Game:
    """Parse and validate a game file. Errors name the failing field."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJSONError(f"not UTF-8: {exc}") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedJSONError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ShapeError("top level must be an object")

    kind = doc.get("kind")
    if kind not in ("normal_form", "factored"):
        raise ShapeError("must be 'normal_form' or 'factored'", "kind")
    players = _as_list(doc.get("players"), "players")
    if not players:
        raise ShapeError("need at least one player", "players")
    names, labels = [], []
    for k, p in enumerate(players):
        if not isinstance(p, dict):
            raise ShapeError("expected an object", f"players[{k}]")
        acts = _as_list(p.get("actions"), f"players[{k}].actions")
        if not acts:
            raise ShapeError("need at least one action", f"players[{k}].actions")
        names.append(str(p.get("name", f"P{k + 1}")))
        labels.append(tuple(str(a) for a in acts))
    counts = tuple(len(a) for a in labels)
    n = len(counts)

    if kind == "normal_form":
        size = math.prod(counts)
        _check_size(size, "payoffs")
        payoffs = _as_list(doc.get("payoffs"), "payoffs")
        if len(payoffs) != n:
            raise ShapeError(f"has {len(payoffs)} tables, expected {n}", "payoffs")
        tables = [_numbers(t, size, f"payoffs[{k}]") for k, t in enumerate(payoffs)]
        scopes = [tuple(range(n))] * n
    else:
        subs = _as_list(doc.get("subobjectives"), "subobjectives")
        by_owner = {}
        for k, sub in enumerate(subs):
            path = f"subobjectives[{k}]"
            if not isinstance(sub, dict):
                raise ShapeError("expected an object", path)
            owner = _as_int(sub.get("owner"), f"{path}.owner")
            if not 1 <= owner <= n:
                raise ShapeError(f"owner {owner} out of range 1..{n}", f"{path}.owner")
            if owner in by_owner:
                raise ShapeError(f"duplicate sub-objective for owner {owner}", f"{path}.owner")
            scope = [_as_int(v, f"{path}.scope[{q}]")
                     for q, v in enumerate(_as_list(sub.get("scope"), f"{path}.scope"))]
            if any(not 1 <= v <= n for v in scope):
                raise ShapeError(f"scope indices must lie in 1..{n}", f"{path}.scope")
            if any(b <= a for a, b in zip(scope, scope[1:])):
                raise ShapeError("scope must be strictly ascending", f"{path}.scope")
            if owner not in scope:
                raise ShapeError("owner must belong to its scope", f"{path}.scope")
            size = math.prod(counts[v - 1] for v in scope)
            _check_size(size, f"{path}.table")
            table = _numbers(sub.get("table"), size, f"{path}.table")
            by_owner[owner] = (tuple(v - 1 for v in scope), table)
        missing = [i for i in range(1, n + 1) if i not in by_owner]
        if missing:
            raise ShapeError(f"no sub-objective for players {missing}", "subobjectives")
        scopes = [by_owner[i][0] for i in range(1, n + 1)]
        tables = [by_owner[i][1] for i in range(1, n + 1)]

    w = doc.get("w")
    if isinstance(w, str):
        if w not in ("uniform", "offdiag"):
            raise ShapeError("must be 'uniform', 'offdiag' or an n x n array", "w")
    elif w is not None:
        rows = _as_list(w, "w")
        if len(rows) != n:
            raise ShapeError(f"has {len(rows)} rows, expected {n}", "w")
        w = np.vstack([_numbers(r, n, f"w[{k}]") for k, r in enumerate(rows)])

    return Game(counts, tuple(scopes), tuple(tables), Flavor(kind),
                tuple(names), tuple(labels), w)


def game_to_dict(game: Game) -> dict:
    names = game.player_names or tuple(f"P{i + 1}" for i in range(game.n))
    labels = game.action_labels or tuple(
        tuple(str(a + 1) for a in range(m)) for m in game.action_counts
    )
    doc = {
        "kind": game.flavor.value,
        "players": [{"name": nm, "actions": list(lb)} for nm, lb in zip(names, labels)],
    }
    if game.flavor == Flavor.NORMAL_FORM:
        doc["payoffs"] = [t.reshape(-1).tolist() for t in game.tables]
    else:
        doc["subobjectives"] = [
            {"owner": i + 1, "scope": [v + 1 for v in scope], "table": t.reshape(-1).tolist()}
            for i, (scope, t) in enumerate(zip(game.scopes, game.tables))
        ]
    if isinstance(game.w, np.ndarray):
        doc["w"] = game.w.tolist()
    elif game.w is not None:
        doc["w"] = game.w
    return doc


def serialize_game(game: Game) -> str:
    # repr-exact floats: json uses float.__repr__, which round-trips.
    return json.dumps(game_to_dict(game), indent=2) + "\n"


def load_game(path: str | Path) -> Game:
    return parse_game(Path(path).read_bytes())


def load_w(path: str | Path) -> np.ndarray:
    """A bare n x n JSON array, or an object with a ``w`` field."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"), parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedJSONError(f"invalid JSON: {exc}") from exc
    if isinstance(doc, dict):
        doc = doc.get("w")
    rows = _as_list(doc, "w")
    return np.vstack([_numbers(r, len(rows), f"w[{k}]") for k, r in enumerate(rows)])


def fmt_float(x: float | None) -> str:
    """17 significant digits, enough to round-trip any double."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def fmt_assignment(x: Iterable[int]) -> str:
    return "|".join(str(a + 1) for a in x)


def soft_trace_rows(game: Game, result) -> list[list[str]]:
    rows = []
    for it in result.trace:
        x = tuple(int(np.argmax(p)) for p in it.profile)
        bound = fmt_float(float(it.bounds.max())) if it.bounds is not None else ""
        rows.append([str(it.iteration), "soft", fmt_float(it.max_delta), fmt_float(it.max_gap),
                     bound, "", fmt_float(global_utility(game, x)), fmt_assignment(x)])
    return rows


def hard_trace_rows(result) -> list[list[str]]:
    return [
        [str(it.iteration), "hard", fmt_float(it.max_delta), "", "",
         "true" if it.consensus else "false", fmt_float(it.best_value),
         fmt_assignment(it.assignment)]
        for it in result.trace
    ]


def render_trace(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def write_trace(path: str | Path, rows: list[list[str]]) -> None:
    Path(path).write_text(render_trace(rows), encoding="utf-8")


def read_trace(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
