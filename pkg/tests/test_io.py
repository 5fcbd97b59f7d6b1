import json

import numpy as np
import pytest

from moment2d import io
from moment2d.lattice import Window
from moment2d.moments import AtomicMeasure, ClassicalMoments, oracle_classical, oracle_extended

from conftest import random_measure


def test_measure_round_trip(tmp_path, rng):
    mu = random_measure(rng, 4)
    path = tmp_path / "mu.json"
    io.dump(path, mu)
    back = io.load(path)
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.weights, mu.weights)


def test_classical_round_trip(tmp_path, rng):
    s = oracle_classical(random_measure(rng, 3), 3)
    path = tmp_path / "s.json"
    io.dump(path, s)
    back = io.load(path)
    assert back.deg_cap == s.deg_cap
    assert back.s == s.s


def test_extended_round_trip(tmp_path, rng):
    u = oracle_extended(random_measure(rng, 3), Window(2, 1))
    path = tmp_path / "u.json"
    io.dump(path, u)
    back = io.load(path)
    assert back.window == u.window
    assert back.u == u.u


def test_awkward_floats_exact(tmp_path):
    vals = [0.1, 1 / 3, 5e-324, 1.7976931348623157e308, -0.0, 2.0**-52]
    mu = AtomicMeasure.from_atoms([(v, -v, 1.0) for v in vals[:1]] + [(vals[1], vals[2], 0.5)])
    path = tmp_path / "mu.json"
    io.dump(path, mu)
    assert np.array_equal(io.load(path).points, mu.points)
    s = ClassicalMoments(0, {(0, 0): complex(vals[3], vals[5])})
    io.dump(path, s)
    assert io.load(path).s == s.s


def test_extra_fields_kept(tmp_path, two_atom):
    path = tmp_path / "mu.json"
    io.dump(path, two_atom, verification={"ok": True})
    assert json.loads(path.read_text())["verification"] == {"ok": True}


def test_non_finite_rejected(tmp_path):
    with pytest.raises(io.FormatError):
        io.classical_to_doc(ClassicalMoments(0, {(0, 0): complex(np.inf, 0.0)}))
    path = tmp_path / "nan.json"
    path.write_text('{"atoms": [{"x1": NaN, "x2": 0.0, "w": 1.0}]}')
    with pytest.raises(io.FormatError):
        io.load(path)


@pytest.mark.parametrize(
    "doc",
    [
        {"atoms": [{"x1": 0.0, "x2": 0.0}]},
        {"atoms": [{"x1": "a", "x2": 0.0, "w": 1.0}]},
        {"atoms": [{"x1": True, "x2": 0.0, "w": 1.0}]},
        {"deg_cap": -1, "s": []},
        {"deg_cap": 0, "s": [{"m": 0, "n": 0, "re": 1.0, "im": 0.0}] * 2},
        {"deg_cap": 0, "s": [{"m": 3, "n": 0, "re": 1.0, "im": 0.0}]},
        {"window": {"deg_cap": 1}, "u": []},
        {"window": {"deg_cap": 1, "res_cap": 0}, "u": [{"m": -1, "k": 0, "l": 0, "n": 0, "r": 0, "t": 0, "re": 0, "im": 0}]},
        {"something": 1},
        [1, 2],
    ],
)
def test_malformed_rejected(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(io.FormatError):
        io.load(path)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(io.FormatError):
        io.load(path)
