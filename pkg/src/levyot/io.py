"""JSON reading and writing for measures, triplets and couplings.

Floats are written with 17 significant digits so every double survives a
round trip. Parsing refuses NaN/Infinity and reports the offending field.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .core import DiscreteLevyMeasure, LevyCoupling, LevyTriplet, ValidationError


class ParseError(ValidationError):
    pass


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = "%.17g" % x
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent=None):
    """Deterministic JSON with 17-digit floats; key order is preserved."""
    return _emit(obj, indent, 0)


def _emit(obj, indent, level):
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (np.bool_,)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return _join("{", "}", items, indent, level)
    if isinstance(obj, (list, tuple)):
        items = [_emit(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return _join("[", "]", items, None, level)  # flat lists stay on one line
        return _join("[", "]", items, indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _join(open_, close, items, indent, level):
    if not items:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(items) + close
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    return open_ + "\n" + ",\n".join(pad + it for it in items) + "\n" + end + close


def _reject_constant(name):
    raise ParseError(f"non-finite number {name!r} is not allowed")


def loads(text, source="<input>"):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except ParseError as exc:
        raise ParseError(f"{source}: {exc}") from None


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ParseError(f"{where}: non-finite number")
    return v


def _vector(v, d, where):
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list of {d} numbers")
    if len(v) != d:
        raise ParseError(f"{where}: expected {d} entries, got {len(v)}")
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _dim(doc, where):
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected a JSON object")
    d = doc.get("d")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ParseError(f"{where}.d: expected a positive integer")
    return d


def _weight(v, where):
    w = _number(v, where)
    if w <= 0:
        raise ParseError(f"{where}: weight must be positive, got {w!r}")
    return w


def measure_from_dict(doc, where="$"):
    d = _dim(doc, where)
    jumps = doc.get("jumps", [])
    if not isinstance(jumps, list):
        raise ParseError(f"{where}.jumps: expected a list")
    locs, ws = [], []
    for i, atom in enumerate(jumps):
        at = f"{where}.jumps[{i}]"
        if not isinstance(atom, dict):
            raise ParseError(f"{at}: expected an object with fields x, w")
        locs.append(_vector(atom.get("x"), d, at + ".x"))
        ws.append(_weight(atom.get("w"), at + ".w"))
    try:
        return DiscreteLevyMeasure(np.array(locs).reshape(-1, d), ws, d=d)
    except ValidationError as exc:
        raise ParseError(f"{where}.jumps: {exc}") from None


def triplet_from_dict(doc, where="$"):
    d = _dim(doc, where)
    drift = _vector(doc.get("drift", [0.0] * d), d, where + ".drift")
    diff = doc.get("diffusion", [[0.0] * d for _ in range(d)])
    if not isinstance(diff, list) or len(diff) != d:
        raise ParseError(f"{where}.diffusion: expected {d} rows")
    rows = [_vector(r, d, f"{where}.diffusion[{i}]") for i, r in enumerate(diff)]
    mu = measure_from_dict(doc, where)
    try:
        return LevyTriplet(drift, rows, mu)
    except ValidationError as exc:
        raise ParseError(f"{where}.diffusion: {exc}") from None


def coupling_from_dict(doc, where="$"):
    d = _dim(doc, where)
    atoms = doc.get("atoms", [])
    if not isinstance(atoms, list):
        raise ParseError(f"{where}.atoms: expected a list")
    xs, ys, ws = [], [], []
    for i, atom in enumerate(atoms):
        at = f"{where}.atoms[{i}]"
        if not isinstance(atom, dict):
            raise ParseError(f"{at}: expected an object with fields x, y, w")
        xs.append(_vector(atom.get("x"), d, at + ".x"))
        ys.append(_vector(atom.get("y"), d, at + ".y"))
        ws.append(_weight(atom.get("w"), at + ".w"))
    return LevyCoupling(np.array(xs).reshape(-1, d), np.array(ys).reshape(-1, d), ws, d=d)


def is_pure_jump_doc(doc):
    return isinstance(doc, dict) and "drift" not in doc and "diffusion" not in doc


def measure_to_dict(mu):
    return {
        "d": mu.d,
        "jumps": [{"x": x.tolist(), "w": float(w)} for x, w in zip(mu.locations, mu.weights)],
    }


def triplet_to_dict(t):
    doc = {"d": t.d, "drift": t.drift.tolist(), "diffusion": t.diffusion.tolist()}
    doc["jumps"] = measure_to_dict(t.jumps)["jumps"]
    return doc


def coupling_to_dict(gamma):
    return {
        "d": gamma.d,
        "atoms": [
            {"x": x.tolist(), "y": y.tolist(), "w": float(w)}
            for x, y, w in zip(gamma.sources, gamma.targets, gamma.weights)
        ],
    }


def location_key(x):
    """String key for a location, used by dual-potential maps."""
    return ",".join(format_float(v) for v in np.asarray(x).ravel())


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), source=str(path))


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def coupled_to_dict(j):
    """Coupled triplet in the triplet schema on ``R^{2d}``, plus the split coupling."""
    doc = {"d": 2 * j.d, "drift": j.drift.tolist(), "diffusion": j.diffusion.tolist()}
    doc["jumps"] = [{"x": a.tolist(), "w": float(w)} for a, w in zip(j.jumps.joint_atoms(), j.jumps.weights)]
    doc["coupling"] = coupling_to_dict(j.jumps)
    return doc


def coupled_from_dict(doc, where="$"):
    from .gen_metric import CoupledTriplet

    d2 = _dim(doc, where)
    if d2 % 2:
        raise ParseError(f"{where}.d: coupled dimension must be even, got {d2}")
    if "coupling" not in doc:
        raise ParseError(f"{where}.coupling: missing field")
    gamma = coupling_from_dict(doc["coupling"], where + ".coupling")
    if gamma.d * 2 != d2:
        raise ParseError(f"{where}.coupling.d: expected {d2 // 2}, got {gamma.d}")
    if "jumps" in doc:
        joint = measure_from_dict({"d": d2, "jumps": doc["jumps"]}, where)
        if joint.key() != (d2, tuple(map(tuple, gamma.joint_atoms().tolist())), tuple(gamma.weights.tolist())):
            raise ParseError(f"{where}.jumps: does not match {where}.coupling")
    drift = _vector(doc.get("drift"), d2, where + ".drift")
    diff = doc.get("diffusion")
    if not isinstance(diff, list) or len(diff) != d2:
        raise ParseError(f"{where}.diffusion: expected {d2} rows")
    rows = [_vector(r, d2, f"{where}.diffusion[{i}]") for i, r in enumerate(diff)]
    try:
        return CoupledTriplet(drift, rows, gamma)
    except ValidationError as exc:
        raise ParseError(f"{where}: {exc}") from None


def solution_to_dict(sol):
    return {
        "cost": sol.cost,
        "plan": coupling_to_dict(sol.plan)["atoms"],
        "phi": {location_key(x): float(p) for x, p in zip(sol.mu.locations, sol.phi)},
        "psi": {location_key(y): float(p) for y, p in zip(sol.nu.locations, sol.psi)},
        "gap": sol.duality_gap,
        "monotone": sol.monotone_certified,
    }
