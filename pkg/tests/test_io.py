import json

import numpy as np
import pytest

from coop_eq.errors import CapacityError, MalformedJSONError, NonFiniteError, ShapeError
from coop_eq.io import (
    TRACE_HEADER,
    fmt_assignment,
    fmt_float,
    hard_trace_rows,
    load_game,
    parse_game,
    render_trace,
    serialize_game,
    soft_trace_rows,
)
from coop_eq.hard import HardConfig, run_hard
from coop_eq.model import Flavor, random_game
from coop_eq.oracle import enumerate_pure_nash
from coop_eq.soft import SoftConfig, run_soft

from conftest import FIXTURES, D


def doc(**overrides):
    base = {
        "kind": "normal_form",
        "players": [{"name": "a", "actions": ["x", "y"]}, {"name": "b", "actions": ["x", "y"]}],
        "payoffs": [[1, 2, 3, 4], [4, 3, 2, 1]],
    }
    base.update(overrides)
    return json.dumps(base)


def test_minimal_game():
    game = parse_game(b'{"kind": "normal_form", "players": [{"name": "p", "actions": ["a"]}],'
                      b' "payoffs": [[0]]}')
    assert game.n == 1 and game.action_counts == (1,)


def test_flattening_order():
    game = parse_game(doc())
    # player 1 slowest: (x,x)=1, (x,y)=2, (y,x)=3, (y,y)=4
    assert game.tables[0][1, 0] == 3.0
    assert game.tables[1][0, 1] == 3.0


def test_pd_fixture_end_to_end():
    assert enumerate_pure_nash(load_game(FIXTURES / "prisoners_dilemma.json")).profiles == [(D, D)]


@pytest.mark.parametrize("text, error, path", [
    (doc(payoffs=[[1, 2, 3], [4, 3, 2, 1]]), ShapeError, "payoffs[0]"),
    (doc(payoffs=[[1, 2, 3, 4]]), ShapeError, "payoffs"),
    (doc(payoffs=[[1, 2, "3", 4], [4, 3, 2, 1]]), ShapeError, "payoffs[0][2]"),
    (doc().replace("[4, 3, 2, 1]", "[4, 3, 2, 1e999]"), NonFiniteError, "payoffs[1][3]"),
    (doc(kind="extensive"), ShapeError, "kind"),
    (doc(players=[]), ShapeError, "players"),
    (doc(w=[[1, 0]]), ShapeError, "w"),
    (doc(w="ring"), ShapeError, "w"),
])
def test_shape_errors_name_the_field(text, error, path):
    with pytest.raises(error) as info:
        parse_game(text)
    assert info.value.path == path
    assert path in str(info.value)


def test_nan_literal_rejected():
    with pytest.raises(NonFiniteError):
        parse_game(doc().replace("[4, 3, 2, 1]", "[4, 3, NaN, 1]"))


def test_malformed_json():
    with pytest.raises(MalformedJSONError):
        parse_game(b"{not json")
    with pytest.raises(MalformedJSONError):
        parse_game(b"\xff\xfe")


def test_size_cap():
    players = [{"name": f"p{k}", "actions": [str(a) for a in range(10)]} for k in range(8)]
    text = json.dumps({"kind": "normal_form", "players": players, "payoffs": []})
    with pytest.raises(CapacityError):
        parse_game(text)


def test_factored_errors():
    base = json.loads((FIXTURES / "chain_factored.json").read_text())

    def broken(k, **change):
        d = json.loads(json.dumps(base))
        d["subobjectives"][k].update(change)
        return json.dumps(d)

    for text, path in [
        (broken(0, scope=[2]), "subobjectives[0].scope"),
        (broken(0, scope=[2, 1]), "subobjectives[0].scope"),
        (broken(1, table=[0.0]), "subobjectives[1].table"),
        (broken(2, owner=1), "subobjectives[2].owner"),
        (broken(2, owner=4), "subobjectives[2].owner"),
    ]:
        with pytest.raises(ShapeError) as info:
            parse_game(text)
        assert info.value.path == path


def test_factored_fixture():
    game = load_game(FIXTURES / "chain_factored.json")
    assert game.flavor == Flavor.FACTORED
    assert game.scopes == ((0, 1), (0, 1, 2), (2,))
    assert isinstance(game.w, np.ndarray) and game.w.shape == (3, 3)


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.json")
                                        if not p.name.startswith("w_")))
def test_round_trip(name):
    game = load_game(FIXTURES / name)
    again = parse_game(serialize_game(game))
    assert again == game
    assert serialize_game(again) == serialize_game(game)


def test_round_trip_random_floats():
    game = random_game((2, 3, 2), seed=5)
    assert parse_game(serialize_game(parse_game(serialize_game(game)))) == parse_game(
        serialize_game(game))
    for a, b in zip(game.tables, parse_game(serialize_game(game)).tables):
        np.testing.assert_array_equal(a, b)


def test_float_format():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert float(fmt_float(1 / 3)) == 1 / 3
    assert fmt_float(None) == ""
    assert fmt_assignment((0, 1, 2)) == "1|2|3"


def test_trace_rows(pd):
    soft = render_trace(soft_trace_rows(pd, run_soft(pd, SoftConfig(alpha=4))))
    lines = soft.splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    first = lines[1].split(",")
    assert first[0] == "1" and first[1] == "soft" and first[5] == ""
    iters = [int(line.split(",")[0]) for line in lines[1:]]
    assert iters == list(range(1, len(iters) + 1))

    hard = render_trace(hard_trace_rows(run_hard(pd, HardConfig(lam=0.5)))).splitlines()
    last = hard[-1].split(",")
    assert last[1] == "hard" and last[5] == "false" and last[7] == "2|2"
    assert float(last[6]) == 2.0
