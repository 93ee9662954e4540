"""Brute-force reference implementations used only by the tests.

Nothing here touches the padded storage, the pair tables or the block
matrices used by the library; everything is plain loops and numpy.linalg.
"""
from __future__ import annotations

import itertools

import numpy as np


def conv_loops(bundle, a: dict, b: dict) -> dict:
    """Convolution by enumerating every ordered pair of arrows."""
    g = bundle.base
    out = {x: np.zeros(bundle.shape(x), dtype=complex) for x in range(g.n)}
    for s, t in itertools.product(range(g.n), repeat=2):
        st = g.mul(s, t)
        if st is None:
            continue
        out[st] = out[st] + bundle.twist(s, t) * (a[s] @ b[t])
    return out


def section_dict(sec) -> dict:
    return {x: sec.value(x) for x in range(sec.bundle.base.n)}


def left_mult_matrix(bundle, a: dict) -> np.ndarray:
    """Matrix of ``f -> a f`` on the space of all sections, flattened entrywise."""
    g = bundle.base
    shapes = [bundle.shape(x) for x in range(g.n)]
    sizes = [r * c for r, c in shapes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    mat = np.zeros((total, total), dtype=complex)
    for col in range(total):
        f = {x: np.zeros(shapes[x], dtype=complex) for x in range(g.n)}
        x = int(np.searchsorted(offsets, col, side="right") - 1)
        f[x].flat[col - offsets[x]] = 1.0
        af = conv_loops(bundle, a, f)
        mat[:, col] = np.concatenate([af[y].ravel() for y in range(g.n)])
    return mat


def norm_b_brute(bundle, a: dict) -> float:
    """Operator norm of left convolution.

    Per source unit the module norm of a column of fibre values is the
    operator norm of the stacked matrix, and left convolution acts on each of
    its columns independently, so the Hilbert-Schmidt (entrywise) operator norm
    of the full map agrees with the module operator norm.
    """
    return float(np.linalg.norm(left_mult_matrix(bundle, a), 2))


def norms_brute(bundle, a: dict) -> dict:
    g = bundle.base
    fib = {x: np.linalg.norm(a[x], 2) for x in range(g.n)}
    n1 = max(sum(fib[x] for x in range(g.n) if g.source[x] == u) for u in g.units)
    n2 = 0.0
    for u in g.units:
        acc = np.zeros((bundle.unit_dim(u),) * 2, dtype=complex)
        for x in range(g.n):
            if g.source[x] == u:
                acc += a[x].conj().T @ a[x]
        n2 = max(n2, np.sqrt(np.linalg.norm(acc, 2)))
    star = {}
    for x in range(g.n):
        inv = int(g.inverse[x])
        star[x] = np.conj(bundle.twist(inv, x)) * a[inv].conj().T
    n1s = max(sum(np.linalg.norm(star[x], 2) for x in range(g.n) if g.source[x] == u) for u in g.units)
    return {"inf": max(fib.values()), "1": n1, "2": float(n2), "i": max(n1, n1s), "b": norm_b_brute(bundle, a)}


def closure_brute(g, s) -> frozenset:
    """Generated subgroupoid by repeated full passes until nothing changes."""
    cur = set(s)
    while True:
        nxt = set(cur)
        for a in cur:
            nxt |= {int(g.inverse[a]), int(g.source[a]), int(g.range[a])}
        for a in cur:
            for b in cur:
                ab = g.mul(a, b)
                if ab is not None:
                    nxt.add(ab)
        if nxt == cur:
            return frozenset(cur)
        cur = nxt


def is_closed(g, s) -> bool:
    return closure_brute(g, s) == frozenset(s)
