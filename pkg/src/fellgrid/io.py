"""
JSON file formats.

Groupoid::

    {"units": [ids], "source": [...], "range": [...], "inverse": [...],
     "product": [[a, b, ab], ...]}

Bundle (``groupoid`` is a path relative to the bundle file, or an inline object)::

    {"groupoid": "g.json", "kind": "matrix", "dims": {"0": 2, "4": 1}}
    {"groupoid": "g.json", "kind": "twisted_line", "cocycle": [[a, b, re, im], ...]}

Section (omitted arrows are zero; entries are row-major ``[re, im]`` pairs)::

    {"bundle": "b.json", "values": [[arrow, [[re, im], ...]], ...]}

Negligible arrows::

    {"null_arrows": [ids]}

Fell morphism (``L`` and ``R`` are ``[rows, cols, [[re, im], ...]]``)::

    {"source": "b.json", "target": "b2.json",
     "phi": {"dom_subgroupoid": [ids], "map": [[g2, g], ...]},
     "beta": {"maps": [[g2, L, R], ...]}}

Errors carry the file name and a JSON path such as ``$.values[3][1]``.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import NegligibleSet
from .bundle import BundleError, FellBundle, MatrixBundle, TwistedLineBundle
from .groupoid import Groupoid, GroupoidError
from .morphism import FellMorphism, MorphismError
from .report import jsonable
from .section import Section

__all__ = [
    "InputError",
    "ParseError",
    "CrossReferenceError",
    "groupoid_to_dict",
    "groupoid_from_dict",
    "bundle_to_dict",
    "bundle_from_dict",
    "section_to_dict",
    "section_from_dict",
    "morphism_to_dict",
    "morphism_from_dict",
    "load_json",
    "load_groupoid",
    "load_bundle",
    "load_section",
    "load_negligible",
    "load_morphism",
    "dump_json",
    "detect_kind",
]


class InputError(ValueError):
    def __init__(self, message: str, file: str | None = None, path: str = "$"):
        self.file = file
        self.path = path
        self.message = message
        where = f"{file}: " if file else ""
        super().__init__(f"{where}{path}: {message}")


class ParseError(InputError):
    pass


class CrossReferenceError(InputError):
    pass


# -- helpers -----------------------------------------------------------------------


def _need(obj: Any, key: str, file, path: str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", file, path)
    if key not in obj:
        raise ParseError(f"missing key {key!r}", file, path)
    return obj[key]


def _int_list(v: Any, file, path: str) -> list[int]:
    if not isinstance(v, list):
        raise ParseError("expected a list of integers", file, path)
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, int):
            raise ParseError("expected an integer", file, f"{path}[{i}]")
        out.append(x)
    return out


def _complex_entries(v: Any, count: int, file, path: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != count:
        raise ParseError(f"expected {count} [re, im] entries", file, path)
    out = np.empty(count, dtype=np.complex128)
    for i, z in enumerate(v):
        if not (isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z)):
            raise ParseError("expected a [re, im] pair of numbers", file, f"{path}[{i}]")
        out[i] = complex(z[0], z[1])
    return out


def _entries(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m, dtype=np.complex128).ravel()]


def load_json(path) -> Any:
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ParseError("file not found", path) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg} at line {exc.lineno})", path) from None


def dump_json(obj: Any, digits: int = 12) -> str:
    """Deterministic JSON text with floats rounded to ``digits`` significant digits."""
    return json.dumps(jsonable(obj, digits), indent=2) + "\n"


def _resolve(ref: Any, file, path: str, loader):
    """Follow a path reference (relative to ``file``) or parse an inline object."""
    if isinstance(ref, str):
        base = os.path.dirname(file) if file else ""
        target = os.path.join(base, ref)
        if not os.path.exists(target):
            raise CrossReferenceError(f"referenced file {ref!r} not found", file, path)
        return loader(target)
    if isinstance(ref, dict):
        return loader(ref, file=file, path=path)
    raise ParseError("expected a file path or an inline object", file, path)


# -- groupoid -------------------------------------------------------------------------


def groupoid_to_dict(g: Groupoid) -> dict:
    return {
        "units": list(g.units),
        "source": g.source.tolist(),
        "range": g.range.tolist(),
        "inverse": g.inverse.tolist(),
        "product": [list(t) for t in sorted(g.product_triples())],
    }


def groupoid_from_dict(d: Any, file=None, path: str = "$") -> Groupoid:
    units = _int_list(_need(d, "units", file, path), file, f"{path}.units")
    source = _int_list(_need(d, "source", file, path), file, f"{path}.source")
    range_ = _int_list(_need(d, "range", file, path), file, f"{path}.range")
    inverse = _int_list(_need(d, "inverse", file, path), file, f"{path}.inverse")
    prod = _need(d, "product", file, path)
    if not isinstance(prod, list):
        raise ParseError("expected a list of [a, b, ab] triples", file, f"{path}.product")
    triples = []
    for i, t in enumerate(prod):
        t = _int_list(t, file, f"{path}.product[{i}]")
        if len(t) != 3:
            raise ParseError("expected an [a, b, ab] triple", file, f"{path}.product[{i}]")
        triples.append(tuple(t))
    try:
        return Groupoid(units, source, range_, inverse, triples)
    except GroupoidError as exc:
        raise ParseError(str(exc), file, path) from None


def load_groupoid(src, file=None, path: str = "$") -> Groupoid:
    if isinstance(src, dict):
        return groupoid_from_dict(src, file, path)
    return groupoid_from_dict(load_json(src), str(src))


# -- bundle ---------------------------------------------------------------------------


def bundle_to_dict(b: FellBundle, groupoid_ref: Any = None) -> dict:
    ref = groupoid_ref if groupoid_ref is not None else groupoid_to_dict(b.base)
    if isinstance(b, MatrixBundle):
        return {"groupoid": ref, "kind": "matrix", "dims": {str(u): b.dims[u] for u in b.base.units}}
    if isinstance(b, TwistedLineBundle):
        cocycle = [[a, c, z.real, z.imag] for (a, c), z in sorted(b.cocycle.items())]
        return {"groupoid": ref, "kind": "twisted_line", "cocycle": cocycle}
    raise TypeError(f"unsupported bundle {type(b).__name__}")


def bundle_from_dict(d: Any, file=None, path: str = "$") -> FellBundle:
    g = _resolve(_need(d, "groupoid", file, path), file, f"{path}.groupoid", load_groupoid)
    kind = _need(d, "kind", file, path)
    try:
        if kind == "matrix":
            dims = _need(d, "dims", file, path)
            if not isinstance(dims, dict):
                raise ParseError("expected an object mapping unit ids to dimensions", file, f"{path}.dims")
            parsed = {}
            for k, v in dims.items():
                try:
                    unit = int(k)
                except ValueError:
                    raise ParseError(f"unit id {k!r} is not an integer", file, f"{path}.dims") from None
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ParseError("dimension must be an integer", file, f"{path}.dims.{k}")
                parsed[unit] = v
            missing = set(g.units) - set(parsed)
            extra = set(parsed) - set(g.units)
            if missing or extra:
                raise CrossReferenceError(
                    f"dims must name exactly the units of the groupoid (missing {sorted(missing)}, extra {sorted(extra)})",
                    file,
                    f"{path}.dims",
                )
            return MatrixBundle(g, parsed)
        if kind == "twisted_line":
            raw = d.get("cocycle", [])
            if not isinstance(raw, list):
                raise ParseError("expected a list of [a, b, re, im]", file, f"{path}.cocycle")
            sigma = {}
            for i, row in enumerate(raw):
                p = f"{path}.cocycle[{i}]"
                if not (isinstance(row, list) and len(row) == 4):
                    raise ParseError("expected [a, b, re, im]", file, p)
                a, b = _int_list(row[:2], file, p)
                if not (0 <= a < g.n and 0 <= b < g.n) or g.mul(a, b) is None:
                    raise CrossReferenceError(f"({a}, {b}) is not a composable pair of the groupoid", file, p)
                sigma[(a, b)] = _complex_entries([row[2:]], 1, file, p)[0]
            return TwistedLineBundle(g, sigma)
    except BundleError as exc:
        raise ParseError(str(exc), file, path) from None
    raise ParseError(f"unknown bundle kind {kind!r}", file, f"{path}.kind")


def load_bundle(src, file=None, path: str = "$") -> FellBundle:
    if isinstance(src, dict):
        return bundle_from_dict(src, file, path)
    return bundle_from_dict(load_json(src), str(src))


# -- section --------------------------------------------------------------------------


def section_to_dict(a: Section, bundle_ref: Any = None) -> dict:
    ref = bundle_ref if bundle_ref is not None else bundle_to_dict(a.bundle)
    values = [[g, _entries(v)] for g, v in sorted(a.as_dict().items())]
    return {"bundle": ref, "values": values}


def section_from_dict(d: Any, file=None, path: str = "$", bundle: FellBundle | None = None) -> Section:
    if bundle is None:
        bundle = _resolve(_need(d, "bundle", file, path), file, f"{path}.bundle", load_bundle)
    raw = _need(d, "values", file, path)
    if not isinstance(raw, list):
        raise ParseError("expected a list of [arrow, entries]", file, f"{path}.values")
    vals = {}
    for i, row in enumerate(raw):
        p = f"{path}.values[{i}]"
        if not (isinstance(row, list) and len(row) == 2 and isinstance(row[0], int)):
            raise ParseError("expected [arrow, entries]", file, p)
        g = row[0]
        if not 0 <= g < bundle.base.n:
            raise CrossReferenceError(f"arrow {g} is not an arrow of the base groupoid", file, f"{p}[0]")
        if g in vals:
            raise ParseError(f"arrow {g} listed twice", file, f"{p}[0]")
        r, c = bundle.shape(g)
        vals[g] = _complex_entries(row[1], r * c, file, f"{p}[1]").reshape(r, c)
    return Section.from_values(bundle, vals)


def load_section(src, file=None, path: str = "$") -> Section:
    if isinstance(src, dict):
        return section_from_dict(src, file, path)
    return section_from_dict(load_json(src), str(src))


# -- negligible sets --------------------------------------------------------------------


def load_negligible(src, n_arrows: int | None = None, file=None) -> NegligibleSet:
    if not isinstance(src, dict):
        file = str(src)
        src = load_json(src)
    ids = _int_list(_need(src, "null_arrows", file, "$"), file, "$.null_arrows")
    if n_arrows is not None:
        for i, a in enumerate(ids):
            if not 0 <= a < n_arrows:
                raise CrossReferenceError(f"arrow {a} is not an arrow of the base groupoid", file, f"$.null_arrows[{i}]")
    return NegligibleSet(ids)


# -- morphisms --------------------------------------------------------------------------


def _matrix_to_list(m: np.ndarray) -> list:
    m = np.asarray(m)
    return [int(m.shape[0]), int(m.shape[1]), _entries(m)]


def _matrix_from_list(v: Any, file, path: str) -> np.ndarray:
    if not (isinstance(v, list) and len(v) == 3 and isinstance(v[0], int) and isinstance(v[1], int)):
        raise ParseError("expected [rows, cols, entries]", file, path)
    r, c = v[0], v[1]
    if r < 1 or c < 1:
        raise ParseError("matrix dimensions must be positive", file, path)
    return _complex_entries(v[2], r * c, file, f"{path}[2]").reshape(r, c)


def morphism_to_dict(m: FellMorphism, source_ref: Any = None, target_ref: Any = None) -> dict:
    return {
        "source": source_ref if source_ref is not None else bundle_to_dict(m.source),
        "target": target_ref if target_ref is not None else bundle_to_dict(m.target),
        "phi": {"dom_subgroupoid": list(m.dom), "map": [[g2, int(g)] for g2, g in zip(m.dom, m.phi)]},
        "beta": {
            "maps": [[g2, _matrix_to_list(l), _matrix_to_list(r)] for g2, l, r in zip(m.dom, m.left, m.right)]
        },
    }


def morphism_from_dict(d: Any, file=None, path: str = "$") -> FellMorphism:
    src = _resolve(_need(d, "source", file, path), file, f"{path}.source", load_bundle)
    tgt = _resolve(_need(d, "target", file, path), file, f"{path}.target", load_bundle)
    phi = _need(d, "phi", file, path)
    dom = _int_list(_need(phi, "dom_subgroupoid", file, f"{path}.phi"), file, f"{path}.phi.dom_subgroupoid")
    dom = sorted(set(dom))
    raw_map = _need(phi, "map", file, f"{path}.phi")
    if not isinstance(raw_map, list):
        raise ParseError("expected a list of [g2, g] pairs", file, f"{path}.phi.map")
    phi_map = {}
    for i, row in enumerate(raw_map):
        pair = _int_list(row, file, f"{path}.phi.map[{i}]")
        if len(pair) != 2:
            raise ParseError("expected a [g2, g] pair", file, f"{path}.phi.map[{i}]")
        phi_map[pair[0]] = pair[1]
    beta = _need(d, "beta", file, path)
    raw_maps = _need(beta, "maps", file, f"{path}.beta")
    if not isinstance(raw_maps, list):
        raise ParseError("expected a list of [g2, L, R]", file, f"{path}.beta.maps")
    fib = {}
    for i, row in enumerate(raw_maps):
        p = f"{path}.beta.maps[{i}]"
        if not (isinstance(row, list) and len(row) == 3 and isinstance(row[0], int)):
            raise ParseError("expected [g2, L, R]", file, p)
        fib[row[0]] = (_matrix_from_list(row[1], file, f"{p}[1]"), _matrix_from_list(row[2], file, f"{p}[2]"))
    for g2 in dom:
        if not 0 <= g2 < tgt.base.n:
            raise CrossReferenceError(f"arrow {g2} is not an arrow of the target base", file, f"{path}.phi.dom_subgroupoid")
        if g2 not in phi_map:
            raise CrossReferenceError(f"phi has no value at arrow {g2}", file, f"{path}.phi.map")
        if g2 not in fib:
            raise CrossReferenceError(f"beta has no fibre map at arrow {g2}", file, f"{path}.beta.maps")
    extra = (set(phi_map) | set(fib)) - set(dom)
    if extra:
        raise CrossReferenceError(f"maps given outside dom_subgroupoid: {sorted(extra)}", file, f"{path}.phi")
    try:
        return FellMorphism(
            src,
            tgt,
            tuple(dom),
            np.array([phi_map[g2] for g2 in dom], dtype=np.int64),
            tuple(fib[g2][0] for g2 in dom),
            tuple(fib[g2][1] for g2 in dom),
        )
    except MorphismError as exc:
        raise CrossReferenceError(str(exc), file, path) from None


def load_morphism(src, file=None, path: str = "$") -> FellMorphism:
    if isinstance(src, dict):
        return morphism_from_dict(src, file, path)
    return morphism_from_dict(load_json(src), str(src))


def detect_kind(d: Any) -> str:
    """Guess which format a parsed JSON object is in."""
    if not isinstance(d, dict):
        return "unknown"
    if "phi" in d:
        return "morphism"
    if "values" in d:
        return "section"
    if "null_arrows" in d:
        return "negligible"
    if "kind" in d:
        return "bundle"
    if "units" in d:
        return "groupoid"
    return "unknown"
