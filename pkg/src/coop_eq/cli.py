"""Command-line entry point: ``coop-eq <command> ...``.

Exit codes: 0 success, 1 any error (bad input, bad config, capacity,
numerical failure), 2 solver stopped at ``--max-iters`` without
converging, 3 ``validate`` found a failed check.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from coop_eq import io, oracle
from coop_eq.errors import CapacityError, CoopEqError
from coop_eq.hard import HardConfig, consensus_is_global_check, run_hard
from coop_eq.model import Game, random_game
from coop_eq.propagation import PropagationWarning, resolve_w, validate_w
from coop_eq.soft import SoftConfig, gap_bound, run_soft, verify_fixed_point

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_INVALID = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def thread_cap() -> int:
    raw = os.environ.get("COOP_EQ_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _labels(game: Game, x) -> str:
    if game.action_labels is None:
        return "(" + ", ".join(str(a + 1) for a in x) + ")"
    return "(" + ", ".join(game.action_labels[i][a] for i, a in enumerate(x)) + ")"


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


def _soft_config(args, alpha=None) -> SoftConfig:
    return SoftConfig(alpha=args.alpha if alpha is None else alpha, hbar=args.hbar,
                      tol=args.tol, max_iters=args.max_iters, init=args.init,
                      seed=args.seed, workers=thread_cap())


def _w_spec(args, game: Game):
    if args.w is None:
        return game.w
    if args.w == "file":
        if game.w is None:
            raise CoopEqError("--w file given but the game file has no 'w' entry")
        return game.w
    return args.w


def _hard_config(args, game: Game, lam=None) -> HardConfig:
    return HardConfig(lam=args.lam if lam is None else lam, w=_w_spec(args, game),
                      tol=args.tol, max_iters=args.max_iters, init=args.init,
                      seed=args.seed, spread=args.spread, workers=thread_cap(),
                      strict_w=args.strict_w)


def _run_hard_reporting(game, cfg):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PropagationWarning)
        result = run_hard(game, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return result


def cmd_solve_soft(args) -> int:
    game = io.load_game(args.game)
    cfg = _soft_config(args)
    result = run_soft(game, cfg)
    if args.trace:
        io.write_trace(args.trace, io.soft_trace_rows(game, result))
    residual = verify_fixed_point(game, result.state, cfg)
    last = result.trace[-1]
    bound = None if last.bounds is None else float(last.bounds.max())
    print(f"converged: {'yes' if result.converged else 'no'}")
    print(f"iterations: {result.iterations}")
    print(f"max nash gap: {_fmt(last.max_gap)}")
    print(f"gap bound: {_fmt(bound)}")
    print(f"fixed-point residual: {residual:.3e}")
    for i, p in enumerate(result.profile):
        name = game.player_names[i] if game.player_names else f"P{i + 1}"
        print(f"strategy {name}: " + " ".join(f"{v:.6f}" for v in p))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_solve_hard(args) -> int:
    game = io.load_game(args.game)
    cfg = _hard_config(args, game)
    result = _run_hard_reporting(game, cfg)
    if args.trace:
        io.write_trace(args.trace, io.hard_trace_rows(result))
    print(f"converged: {'yes' if result.converged else 'no'}")
    print(f"iterations: {result.iterations}")
    print(f"best assignment: {_labels(game, result.assignment)}")
    if any(result.ties):
        print("ties: " + ", ".join(str(i + 1) for i, t in enumerate(result.ties) if t))
    print(f"consensus: {'yes' if result.consensus else 'no'}")
    if result.converged and result.consensus and cfg.constant:
        try:
            report = consensus_is_global_check(game, result)
            print(f"pure nash: {'yes' if report.is_pure_nash else 'no'}")
            print(f"global optimum: {'yes' if report.is_global_optimum else 'no'}"
                  f" (value {report.value:.6g}, optimum {report.optimum_value:.6g})")
        except CapacityError as exc:
            print(f"oracle skipped: {exc}")
    print(f"contraction modulus: {_fmt(result.modulus)}")
    print(f"empirical contraction ratio: {_fmt(result.empirical_ratio())}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _parse_values(raw: str) -> list[float]:
    values = [float(v) for v in raw.split(",") if v.strip()]
    if not values:
        raise CoopEqError("--values must list at least one number")
    return values


def _sweep_soft_row(game, args, alpha):
    cfg = _soft_config(args, alpha)
    result = run_soft(game, cfg)
    residual = verify_fixed_point(game, result.state, cfg)
    bound = gap_bound(max(game.action_counts), alpha) if alpha >= 1 else None
    return [io.fmt_float(alpha), str(result.converged).lower(), str(result.iterations),
            io.fmt_float(result.trace[-1].max_gap), io.fmt_float(bound), io.fmt_float(residual)]


def _sweep_hard_row(game, args, lam):
    cfg = _hard_config(args, game, lam)
    result = run_hard(game, cfg)
    return [io.fmt_float(lam), str(result.converged).lower(), str(result.iterations),
            str(result.consensus).lower(), io.fmt_assignment(result.assignment),
            io.fmt_float(result.modulus), io.fmt_float(result.empirical_ratio())]


SWEEP_HEADERS = {
    "alpha": ["alpha", "converged", "iterations", "max_gap", "gap_bound", "residual"],
    "lambda": ["lambda", "converged", "iterations", "consensus", "best_assignment",
               "contraction_modulus", "empirical_ratio"],
}


def cmd_sweep(args) -> int:
    game = io.load_game(args.game)
    values = _parse_values(args.values)
    if args.sweep == "alpha":
        for a in values:
            SoftConfig(alpha=a)
        row = lambda v: _sweep_soft_row(game, args, v)  # noqa: E731
    else:
        for lam in values:
            HardConfig(lam=lam)
        resolve_w(_w_spec(args, game), game.n)
        row = lambda v: _sweep_hard_row(game, args, v)  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PropagationWarning)
        workers = thread_cap()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(row, values))
        else:
            rows = [row(v) for v in values]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SWEEP_HEADERS[args.sweep])
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.w_file:
        w = io.load_w(args.w_file)
        print(f"propagation matrix: {w.shape[0]}x{w.shape[1]} from {args.w_file}")
    else:
        game = io.load_game(args.game)
        print(f"game: {game.flavor.value}, {game.n} players, actions "
              + "x".join(str(m) for m in game.action_counts))
        for i, scope in enumerate(game.scopes):
            print(f"  player {i + 1} scope: " + ",".join(str(v + 1) for v in scope))
        spec = game.w if game.w is not None else "uniform"
        if isinstance(spec, str):
            w = np.asarray(resolve_w(spec, game.n).matrix)
            print(f"propagation matrix: {spec}")
        else:
            w = spec
            print("propagation matrix: from game file")
    report = validate_w(w)
    for name in ("nonnegative", "column_stochastic", "irreducible", "aperiodic"):
        print(f"{name}: {'pass' if getattr(report, name) else 'FAIL'}")
    if not report.structural_ok or not report.irreducible:
        for f in report.failures:
            print(f"failed: {f}")
        return EXIT_INVALID
    if not report.aperiodic:
        if args.strict_w:
            print("failed: periodic propagation matrix (--strict-w)")
            return EXIT_INVALID
        print(f"warning: {report.failures[-1]}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    game = io.load_game(args.game)
    nash = oracle.enumerate_pure_nash(game)
    best_set, best = oracle.global_optimum(game)
    print(f"pure nash equilibria: {len(nash.profiles)}")
    for x, margins in zip(nash.profiles, nash.margins):
        print(f"  {_labels(game, x)} margins " + " ".join(_fmt(m) for m in margins))
    print(f"global optimum value: {best:.17g}")
    for x in best_set:
        print(f"  {_labels(game, x)}")
    return EXIT_OK


def cmd_random_game(args) -> int:
    counts = [int(v) for v in args.actions.split(",")]
    if len(counts) == 1:
        counts = counts * args.players
    if len(counts) != args.players:
        raise CoopEqError("--actions must give one count or one per player")
    game = random_game(counts, seed=args.seed, low=args.low, high=args.high)
    text = io.serialize_game(game)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _hard_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--w", choices=["uniform", "offdiag", "file"], default=None)
    p.add_argument("--spread", type=float, default=10.0,
                   help="random init draws from [-spread, spread]")
    p.add_argument("--strict-w", action="store_true")


def _common(p):
    p.add_argument("--game", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coop-eq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-soft", help="soft-decision iteration")
    _common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--init", choices=["uniform", "random"], default="uniform")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_solve_soft, default_tol=1e-10)

    p = sub.add_parser("solve-hard", help="max-sum iteration")
    _common(p)
    _hard_flags(p)
    p.add_argument("--init", choices=["zero", "random"], default="zero")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_solve_hard, default_tol=1e-9)

    p = sub.add_parser("sweep", help="one summary row per parameter value")
    _common(p)
    p.add_argument("--sweep", choices=["alpha", "lambda"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--hbar", type=float, default=1.0)
    _hard_flags(p)
    p.add_argument("--init", choices=["uniform", "random", "zero"], default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep, default_tol=None)

    p = sub.add_parser("validate", help="check a game file and its propagation matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--game")
    src.add_argument("--w-file")
    p.add_argument("--strict-w", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="brute-force pure Nash equilibria and global optimum")
    p.add_argument("--game", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("random-game", help="write a random normal-form game file")
    p.add_argument("--players", type=int, default=2)
    p.add_argument("--actions", default="2", help="one count, or one per player")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_random_game)
    return parser


def _fill_defaults(args) -> None:
    if args.command == "sweep":
        soft = args.sweep == "alpha"
        if args.tol is None:
            args.tol = 1e-10 if soft else 1e-9
        if args.init is None:
            args.init = "uniform" if soft else "zero"
    elif getattr(args, "tol", None) is None and hasattr(args, "default_tol"):
        args.tol = args.default_tol


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    _fill_defaults(args)
    try:
        return args.func(args)
    except (CoopEqError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
