"""
Seeded random instances: groupoids, bundles, sections and Fell morphisms.

Every function takes a ``numpy.random.Generator`` so whole test corpora are
reproducible from one seed.  Sizes are kept moderate so that the block
matrices behind ``norm_b`` stay below about 60 rows.
"""
from __future__ import annotations

import math

import numpy as np

from .bundle import FellBundle, MatrixBundle, TwistedLineBundle
from .groupoid import (
    Groupoid,
    action_groupoid,
    cyclic_group,
    direct_product,
    disjoint_union,
    pair_groupoid,
)
from .morphism import FellMorphism

__all__ = [
    "random_groupoid",
    "random_phases",
    "coboundary_cocycle",
    "bilinear_cocycle",
    "random_bundle",
    "random_unitary",
    "random_isometry",
    "random_morphism",
    "morphism_chain",
    "disjoint_union_instance",
]


def _free_plus_fixed(k: int, free: int, fixed: int) -> Groupoid:
    """``Z/k`` acting on ``free`` regular orbits plus ``fixed`` fixed points."""
    table = (np.arange(k)[:, None] + np.arange(k)[None, :]) % k
    m = k * free + fixed
    action = np.zeros((k, m), dtype=np.int64)
    for g in range(k):
        for o in range(free):
            for x in range(k):
                action[g, o * k + x] = o * k + (x + g) % k
        for p in range(fixed):
            action[g, k * free + p] = k * free + p
    return action_groupoid(table, action)


def random_groupoid(rng: np.random.Generator, max_arrows: int = 60, max_star: int | None = None) -> Groupoid:
    """One of several families (pair, cyclic, unions, products, actions).

    ``max_star`` bounds the number of arrows sharing a source, which is the
    block count of each ``REP_x`` in ``norm_b``.
    """
    max_star = max_star or max_arrows

    def small():
        pick = int(rng.integers(3))
        if pick == 0:
            return pair_groupoid(int(rng.integers(1, 4)))
        if pick == 1:
            return cyclic_group(int(rng.integers(1, 5)))
        return _free_plus_fixed(2, 1, int(rng.integers(0, 2)))

    for _ in range(100):
        family = int(rng.integers(6))
        if family == 0:
            g = pair_groupoid(int(rng.integers(1, 8)))
        elif family == 1:
            g = cyclic_group(int(rng.integers(1, 13)))
        elif family == 2:
            g = disjoint_union(small(), small())
        elif family == 3:
            g = direct_product(pair_groupoid(int(rng.integers(1, 4))), cyclic_group(int(rng.integers(1, 5))))
        elif family == 4:
            k = int(rng.integers(2, 5))
            g = _free_plus_fixed(k, int(rng.integers(1, 3)), int(rng.integers(0, 3)))
        else:
            g = direct_product(cyclic_group(int(rng.integers(2, 4))), cyclic_group(int(rng.integers(2, 4))))
        star = max(len(v) for v in g.by_source.values())
        if g.n <= max_arrows and star <= max_star:
            return g
    return pair_groupoid(2)


def random_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(n))


def coboundary_cocycle(g: Groupoid, phase: np.ndarray) -> dict:
    """``sigma(a, b) = c(a) c(b) / c(ab)`` with ``c`` forced to 1 on units."""
    c = np.asarray(phase, dtype=np.complex128).copy()
    c[list(g.units)] = 1.0
    return {(a, b): c[a] * c[b] / c[ab] for a, b, ab in g.product_triples()}


def bilinear_cocycle(p: int, q: int, k: int = 1) -> dict:
    """On ``Z/p x Z/q`` (arrow ``(x, y)`` has id ``x*q + y``):
    ``sigma((x1, y1), (x2, y2)) = exp(2 pi i k y1 x2 / gcd(p, q))``.

    Not a coboundary when ``k`` is prime to ``gcd(p, q) > 1``.
    """
    d = math.gcd(p, q)
    out = {}
    for x1 in range(p):
        for y1 in range(q):
            for x2 in range(p):
                for y2 in range(q):
                    z = np.exp(2j * np.pi * k * y1 * x2 / d)
                    out[(x1 * q + y1, x2 * q + y2)] = z
    return out


def random_bundle(
    rng: np.random.Generator, kind: str | None = None, max_dim: int = 4, max_arrows: int = 60
) -> FellBundle:
    """A random matrix or twisted line bundle.

    Matrix bundles draw dimensions in ``1..max_dim`` over groupoids whose
    source stars have at most 15 arrows.  Line bundles use a random
    coboundary, multiplied by a bilinear (non-trivial) cocycle on products of
    cyclic groups.
    """
    if kind is None:
        kind = "matrix" if rng.random() < 0.5 else "twisted_line"
    if kind == "matrix":
        g = random_groupoid(rng, max_arrows=max_arrows, max_star=15)
        dims = rng.integers(1, max_dim + 1, size=len(g.units))
        return MatrixBundle(g, dims.tolist())
    if kind != "twisted_line":
        raise ValueError(f"unknown bundle kind {kind!r}")
    if rng.random() < 0.3 and max_arrows >= 16:
        p, q = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        while math.gcd(p, q) == 1 or p * q > max_arrows:
            p, q = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        g = direct_product(cyclic_group(p), cyclic_group(q))
        sigma = bilinear_cocycle(p, q, int(rng.integers(1, math.gcd(p, q))))
    else:
        g = random_groupoid(rng, max_arrows=max_arrows)
        sigma = {}
    cob = coboundary_cocycle(g, random_phases(g.n, rng))
    total = {key: sigma.get(key, 1.0) * cob[key] for key in cob}
    return TwistedLineBundle(g, total)


def random_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """``rows x cols`` matrix with orthonormal columns (``rows >= cols``)."""
    return random_unitary(rows, rng)[:, :cols]


# -- morphisms -----------------------------------------------------------------------


def _conjugating_maps(src: FellBundle, tgt_base: Groupoid, dom, phi, rng, max_dim: int):
    """Target bundle over ``tgt_base`` plus fibre maps for ``dom`` -> ``src`` via ``phi``.

    Units of ``tgt_base`` outside ``dom`` get random data.
    """
    dom = list(dom)
    phi = np.asarray(phi, dtype=np.int64)
    on_dom = dict(zip(dom, phi.tolist()))
    if isinstance(src, MatrixBundle):
        dims, iso = {}, {}
        for x in tgt_base.units:
            if x in on_dom:
                d = src.dims[on_dom[x]]
                dims[x] = int(rng.integers(d, max(d, max_dim) + 1))
                iso[x] = random_isometry(dims[x], d, rng)
            else:
                dims[x] = int(rng.integers(1, max_dim + 1))
        tgt = MatrixBundle(tgt_base, dims)
        left = tuple(iso[int(tgt_base.range[g])] for g in dom)
        right = tuple(iso[int(tgt_base.source[g])].conj().T for g in dom)
        return tgt, left, right
    chi = random_phases(tgt_base.n, rng)
    chi[list(tgt_base.units)] = 1.0
    other = coboundary_cocycle(tgt_base, random_phases(tgt_base.n, rng))
    sigma = {}
    for a, b, ab in tgt_base.product_triples():
        if a in on_dom and b in on_dom:
            sigma[(a, b)] = src.twist(on_dom[a], on_dom[b]) * chi[ab] / (chi[a] * chi[b])
        else:
            sigma[(a, b)] = other[(a, b)]
    tgt = TwistedLineBundle(tgt_base, sigma)
    left = tuple(np.array([[chi[g]]]) for g in dom)
    right = tuple(np.ones((1, 1), dtype=np.complex128) for _ in dom)
    return tgt, left, right


def random_morphism(src: FellBundle, rng: np.random.Generator, kind: str | None = None, max_dim: int = 4) -> FellMorphism:
    """A random valid Fell morphism out of ``src``.

    Kinds:

    ``"twist"``     same base, identity functor, random isometries / characters;
    ``"inclusion"`` target base ``Gamma`` disjoint union a small extra groupoid,
                    defined on the first copy only;
    ``"fold"``      target base ``Gamma`` disjoint union ``Gamma``, both copies
                    mapped onto ``Gamma``;
    ``"covering"``  for a one-unit base (a group ``K``), the action groupoid of
                    ``K`` acting on itself plus fixed points, mapped by ``(k, x) -> k``.
    """
    g = src.base
    kinds = ["twist", "inclusion", "fold"]
    if len(g.units) == 1 and g.n <= 6:
        kinds.append("covering")
    if kind is None:
        kind = kinds[int(rng.integers(len(kinds)))]
    n = g.n
    if kind == "twist":
        base2, dom, phi = g, list(range(n)), np.arange(n)
    elif kind == "inclusion":
        extra = pair_groupoid(int(rng.integers(1, 3))) if rng.random() < 0.5 else cyclic_group(int(rng.integers(1, 4)))
        base2 = disjoint_union(g, extra)
        dom, phi = list(range(n)), np.arange(n)
    elif kind == "fold":
        base2 = disjoint_union(g, g)
        dom, phi = list(range(2 * n)), np.concatenate([np.arange(n), np.arange(n)])
    elif kind == "covering":
        if len(g.units) != 1:
            raise ValueError("covering morphisms need a one-unit base")
        table = np.array([[g.mul(a, b) for b in range(n)] for a in range(n)])
        fixed = int(rng.integers(0, 2))
        m = n + fixed
        action = np.zeros((n, m), dtype=np.int64)
        action[:, :n] = table
        action[:, n:] = np.arange(n, m)[None, :]
        base2 = action_groupoid(table, action)
        # arrow (k, x) has id k*m + x and maps to k
        dom = list(range(base2.n))
        phi = np.array([a // m for a in dom])
    else:
        raise ValueError(f"unknown morphism kind {kind!r}")
    tgt, left, right = _conjugating_maps(src, base2, dom, phi, rng, max_dim)
    return FellMorphism(src, tgt, tuple(dom), phi, left, right)


def morphism_chain(src: FellBundle, length: int, rng: np.random.Generator, max_arrows: int = 120) -> list[FellMorphism]:
    """``length`` composable random morphisms starting at ``src``.

    Kinds that would push the target base past ``max_arrows`` are replaced by
    ``"twist"``.
    """
    out = []
    cur = src
    for _ in range(length):
        kind = None
        for _ in range(10):
            m = random_morphism(cur, rng, kind=kind)
            if m.target.base.n <= max_arrows:
                break
            kind = "twist"
        out.append(m)
        cur = m.target
    return out


def disjoint_union_instance(rng: np.random.Generator, kind: str | None = None, max_dim: int = 3):
    """Bundle over a disjoint union of two small groupoids, for essential-seminorm tests.

    Returns ``(bundle, first_copy_arrows, second_copy_arrows)``.
    """
    def part():
        pick = int(rng.integers(3))
        if pick == 0:
            return pair_groupoid(int(rng.integers(1, 4)))
        if pick == 1:
            return cyclic_group(int(rng.integers(1, 5)))
        return _free_plus_fixed(2, 1, int(rng.integers(0, 2)))

    g1, g2 = part(), part()
    g = disjoint_union(g1, g2)
    if kind is None:
        kind = "matrix" if rng.random() < 0.5 else "twisted_line"
    if kind == "matrix":
        bundle = MatrixBundle(g, rng.integers(1, max_dim + 1, size=len(g.units)).tolist())
    else:
        bundle = TwistedLineBundle(g, coboundary_cocycle(g, random_phases(g.n, rng)))
    return bundle, frozenset(range(g1.n)), frozenset(range(g1.n, g.n))
