"""JSON file formats for measures, classical moments and extended moments.

Floats are written with Python's shortest round-trip representation, so
``parse(serialize(x)) == x`` bit for bit for finite values.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .lattice import ExtendedIndex, Window
from .moments import AtomicMeasure, ClassicalMoments, ExtendedMoments


class FormatError(ValueError):
    """The document does not match the expected layout."""


def _require(doc: Any, key: str, kind, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"{where}: missing field {key!r}")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FormatError(f"{where}: field {key!r} must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise FormatError(f"{where}: field {key!r} must be finite")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise FormatError(f"{where}: field {key!r} must be an integer")
    elif not isinstance(value, kind):
        raise FormatError(f"{where}: field {key!r} has the wrong type")
    return value


def _finite(x: float, what: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise FormatError(f"cannot serialize non-finite {what}")
    return x


# measures


def measure_to_doc(mu: AtomicMeasure) -> dict:
    return {
        "atoms": [
            {"x1": _finite(x1, "x1"), "x2": _finite(x2, "x2"), "w": _finite(w, "weight")}
            for x1, x2, w in mu.atoms
        ]
    }


def measure_from_doc(doc: Any) -> AtomicMeasure:
    atoms = _require(doc, "atoms", list, "measure")
    rows = []
    for j, atom in enumerate(atoms):
        where = f"measure atom {j}"
        rows.append(tuple(_require(atom, key, float, where) for key in ("x1", "x2", "w")))
    try:
        return AtomicMeasure.from_atoms(rows)
    except ValueError as exc:
        raise FormatError(f"measure: {exc}") from exc


# classical moments


def classical_to_doc(s: ClassicalMoments) -> dict:
    entries = []
    for (m, n), val in sorted(s.s.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0])):
        val = complex(val)
        entries.append({"m": m, "n": n, "re": _finite(val.real, "re"), "im": _finite(val.imag, "im")})
    return {"deg_cap": s.deg_cap, "s": entries}


def classical_from_doc(doc: Any) -> ClassicalMoments:
    deg_cap = _require(doc, "deg_cap", int, "classical")
    if deg_cap < 0:
        raise FormatError("classical: deg_cap must be non-negative")
    s = {}
    for j, entry in enumerate(_require(doc, "s", list, "classical")):
        where = f"classical entry {j}"
        m, n = (_require(entry, key, int, where) for key in ("m", "n"))
        if m < 0 or n < 0 or m + n > 2 * deg_cap:
            raise FormatError(f"{where}: (m, n) = ({m}, {n}) outside the degree range")
        if (m, n) in s:
            raise FormatError(f"{where}: duplicate entry ({m}, {n})")
        s[(m, n)] = complex(_require(entry, "re", float, where), _require(entry, "im", float, where))
    return ClassicalMoments(deg_cap, s)


# extended moments


def extended_to_doc(u: ExtendedMoments) -> dict:
    from .lattice import canonical_key

    entries = []
    for idx in sorted(u.u, key=canonical_key):
        val = complex(u.u[idx])
        entry = dict(zip(("m", "k", "l", "n", "r", "t"), (int(v) for v in idx)))
        entry["re"] = _finite(val.real, "re")
        entry["im"] = _finite(val.imag, "im")
        entries.append(entry)
    return {
        "window": {"deg_cap": u.window.deg_cap, "res_cap": u.window.res_cap},
        "u": entries,
    }


def extended_from_doc(doc: Any) -> ExtendedMoments:
    wdoc = _require(doc, "window", dict, "extended")
    deg_cap = _require(wdoc, "deg_cap", int, "extended window")
    res_cap = _require(wdoc, "res_cap", int, "extended window")
    if deg_cap < 0 or res_cap < 0:
        raise FormatError("extended window: caps must be non-negative")
    u = {}
    for j, entry in enumerate(_require(doc, "u", list, "extended")):
        where = f"extended entry {j}"
        idx = ExtendedIndex(*(_require(entry, key, int, where) for key in ("m", "k", "l", "n", "r", "t")))
        if idx.m < 0 or idx.n < 0:
            raise FormatError(f"{where}: powers m, n must be non-negative")
        if idx in u:
            raise FormatError(f"{where}: duplicate entry {idx}")
        u[idx] = complex(_require(entry, "re", float, where), _require(entry, "im", float, where))
    return ExtendedMoments(Window(deg_cap, res_cap), u)


# files


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def write_json(path: str | Path, doc: Any) -> None:
    text = json.dumps(doc, indent=1, allow_nan=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load(path: str | Path):
    """Read any of the three formats, telling them apart by their fields."""
    doc = read_json(path)
    if isinstance(doc, dict) and "atoms" in doc:
        return measure_from_doc(doc)
    if isinstance(doc, dict) and "window" in doc:
        return extended_from_doc(doc)
    if isinstance(doc, dict) and "deg_cap" in doc:
        return classical_from_doc(doc)
    raise FormatError(f"{path}: not a measure, classical or extended moment document")


def dump(path: str | Path, obj, **extra) -> None:
    if isinstance(obj, AtomicMeasure):
        doc = measure_to_doc(obj)
    elif isinstance(obj, ClassicalMoments):
        doc = classical_to_doc(obj)
    elif isinstance(obj, ExtendedMoments):
        doc = extended_to_doc(obj)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    doc.update(extra)
    write_json(path, doc)
