"""
Star-bijective functors, pullbacks, fibre morphisms and their composition.

A Fell morphism from a bundle ``rho`` over ``Gamma`` to a bundle ``rho2``
over ``Gamma2`` consists of

* a subgroupoid ``dom`` of ``Gamma2`` (arrow ids of ``Gamma2``),
* a star-bijective functor ``phi`` from ``dom`` to ``Gamma``, and
* a fibre map over each arrow ``g2`` of ``dom`` sending the fibre of ``rho``
  at ``phi(g2)`` to the fibre of ``rho2`` at ``g2``.

Fibre maps are stored as pairs ``(L, R)`` acting by ``v -> L @ v @ R``.  For
matrix bundles the natural choice is ``L = W[range g2]`` and
``R = W[source g2]^H`` for isometries ``W``; for line bundles it is a
character ``L = chi(g2)``, ``R = 1``.

On sections the morphism acts by ``a -> beta(pullback(a))`` extended by zero
off ``dom``; this is :func:`algebraize`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .bundle import BundleMismatch, FellBundle, MatrixBundle, TwistedLineBundle, random_fiber_value
from .groupoid import Groupoid, GroupoidError, induced_subgroupoid, is_subgroupoid
from .linalg import DEFAULT_TOL, Tolerance, operator_norm
from .report import Report
from .section import Section

__all__ = [
    "MorphismError",
    "NotAFunctor",
    "NotStarBijective",
    "InvalidMorphism",
    "NotComposableMorphisms",
    "GroupoidFunctor",
    "check_star_bijective",
    "pullback_bundle",
    "pullback_section",
    "FellMorphism",
    "identity_morphism",
    "validate_morphism",
    "apply_fibre_morphism",
    "compose_fell",
    "algebraize",
    "image_restriction",
]


class MorphismError(ValueError):
    pass


class NotAFunctor(MorphismError):
    pass


class NotStarBijective(MorphismError):
    pass


class InvalidMorphism(MorphismError):
    pass


class NotComposableMorphisms(MorphismError):
    pass


class GroupoidFunctor:
    """Arrow map ``dom -> cod`` that preserves defined products.

    ``NotAFunctor`` is raised on construction if some ``map(ab)`` differs
    from ``map(a) map(b)`` or a unit is sent to a non-unit.
    """

    def __init__(self, dom: Groupoid, cod: Groupoid, mapping):
        self.dom = dom
        self.cod = cod
        m = np.asarray(mapping, dtype=np.int64)
        if m.shape != (dom.n,):
            raise NotAFunctor(f"map needs one entry per arrow of the domain ({dom.n})")
        if m.size and (m.min() < 0 or m.max() >= cod.n):
            raise NotAFunctor("map sends an arrow outside the codomain")
        self.map = m
        self.map.flags.writeable = False
        for x in dom.units:
            if int(m[x]) not in cod.unit_set:
                raise NotAFunctor(f"unit {x} is sent to non-unit {int(m[x])}")
        for a, b, ab in dom.product_triples():
            if cod.mul(int(m[a]), int(m[b])) != int(m[ab]):
                raise NotAFunctor(f"map(ab) != map(a) map(b) for pair ({a}, {b})")

    def __call__(self, a: int) -> int:
        return int(self.map[a])

    def __repr__(self):
        return f"GroupoidFunctor({self.dom!r} -> {self.cod!r})"

    @property
    def image(self) -> frozenset:
        return frozenset(self.map.tolist())


def check_star_bijective(f: GroupoidFunctor) -> bool:
    """Unique lifting: each cod arrow with source ``f(x)`` has exactly one
    preimage among the dom arrows with source ``x``."""
    dom, cod = f.dom, f.cod
    for x in dom.units:
        lifts = f.map[dom.by_source[x]]
        targets = cod.by_source[int(f.map[x])]
        if lifts.shape[0] != targets.shape[0]:
            return False
        if not np.array_equal(np.sort(lifts), targets):
            return False
    return True


def _require_star_bijective(f: GroupoidFunctor) -> None:
    if not check_star_bijective(f):
        raise NotStarBijective("functor is not star-bijective")


def pullback_bundle(f: GroupoidFunctor, rho: FellBundle) -> FellBundle:
    """Bundle over ``f.dom`` whose fibre at ``g`` is the fibre of ``rho`` at ``f(g)``."""
    if f.cod != rho.base:
        raise BundleMismatch("functor codomain is not the base of the bundle")
    _require_star_bijective(f)
    dom = f.dom
    if isinstance(rho, MatrixBundle):
        return MatrixBundle(dom, {x: rho.dims[f(x)] for x in dom.units})
    if isinstance(rho, TwistedLineBundle):
        return TwistedLineBundle(dom, {(a, b): rho.twist(f(a), f(b)) for a, b, _ in dom.product_triples()})
    raise TypeError(f"unsupported bundle kind {type(rho).__name__}")


def pullback_section(f: GroupoidFunctor, rho: FellBundle, a: Section, target: FellBundle | None = None) -> Section:
    """``a o f`` as a section of the pullback bundle (passed as ``target`` to reuse one)."""
    if not a.bundle.same_as(rho):
        raise BundleMismatch("section does not live on rho")
    if target is None:
        target = pullback_bundle(f, rho)
    return Section(target, a.values[f.map])


def image_restriction(f: GroupoidFunctor, a: Section) -> Section:
    """``a`` restricted to the image ``f[dom]``."""
    keep = np.zeros(a.bundle.base.n, dtype=bool)
    keep[f.map] = True
    return Section(a.bundle, np.where(keep[:, None, None], a.values, 0))


# -- Fell morphisms ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FellMorphism:
    """A Fell morphism ``source -> target``; see the module docstring.

    Attributes
    ----------
    source, target : FellBundle
    dom : tuple of int
        Sorted arrow ids of ``target.base`` forming a subgroupoid.
    phi : ndarray
        ``phi[k]`` is the arrow of ``source.base`` assigned to ``dom[k]``.
    left, right : list of ndarray
        ``left[k]`` has shape ``(rows of target at dom[k], rows of source at phi[k])``
        and ``right[k]`` shape ``(cols of source, cols of target)``.
    """

    source: FellBundle
    target: FellBundle
    dom: tuple
    phi: np.ndarray
    left: tuple
    right: tuple

    def __post_init__(self):
        dom = tuple(int(a) for a in self.dom)
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.int64))
        if len(dom) != len(self.phi) or len(dom) != len(self.left) or len(dom) != len(self.right):
            raise InvalidMorphism("dom, phi, left and right must have equal length")
        if list(dom) != sorted(set(dom)):
            raise InvalidMorphism("dom must be strictly increasing")
        if dom and (dom[0] < 0 or dom[-1] >= self.target.base.n):
            raise InvalidMorphism("dom refers to arrows outside the target base")
        if self.phi.size and (self.phi.min() < 0 or self.phi.max() >= self.source.base.n):
            raise InvalidMorphism("phi refers to arrows outside the source base")
        for k, g2 in enumerate(dom):
            g = int(self.phi[k])
            r2, c2 = self.target.shape(g2)
            r, c = self.source.shape(g)
            if np.shape(self.left[k]) != (r2, r) or np.shape(self.right[k]) != (c, c2):
                raise InvalidMorphism(f"fibre map at arrow {g2} has the wrong shape")

    @cached_property
    def sub(self) -> tuple[Groupoid, tuple]:
        try:
            return induced_subgroupoid(self.target.base, self.dom)
        except GroupoidError as exc:
            raise InvalidMorphism(str(exc)) from exc

    @cached_property
    def functor(self) -> GroupoidFunctor:
        try:
            return GroupoidFunctor(self.sub[0], self.source.base, self.phi)
        except NotAFunctor as exc:
            raise InvalidMorphism(str(exc)) from exc

    @cached_property
    def pulled(self) -> FellBundle:
        return pullback_bundle(self.functor, self.source)

    @cached_property
    def _padded(self) -> tuple[np.ndarray, np.ndarray]:
        # padded L (m, D2, D) and R (m, D, D2) for vectorized application
        d, d2 = self.source.dmax, self.target.dmax
        m = len(self.dom)
        L = np.zeros((m, d2, d), dtype=np.complex128)
        R = np.zeros((m, d, d2), dtype=np.complex128)
        for k in range(m):
            l, r = np.asarray(self.left[k]), np.asarray(self.right[k])
            L[k, : l.shape[0], : l.shape[1]] = l
            R[k, : r.shape[0], : r.shape[1]] = r
        return L, R

    def fibre_map(self, k: int, v: np.ndarray) -> np.ndarray:
        return np.asarray(self.left[k]) @ v @ np.asarray(self.right[k])

    def phi_of(self, g2: int) -> int | None:
        """``phi`` as a partial map on arrow ids of the target base."""
        k = self._index.get(int(g2))
        return None if k is None else int(self.phi[k])

    @cached_property
    def _index(self) -> dict[int, int]:
        return {g2: k for k, g2 in enumerate(self.dom)}


def identity_morphism(bundle: FellBundle) -> FellMorphism:
    n = bundle.base.n
    left = tuple(np.eye(bundle.shape(g)[0], dtype=np.complex128) for g in range(n))
    right = tuple(np.eye(bundle.shape(g)[1], dtype=np.complex128) for g in range(n))
    return FellMorphism(bundle, bundle, tuple(range(n)), np.arange(n), left, right)


def validate_morphism(m: FellMorphism, trials: int = 50, seed: int = 0, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Check structure exhaustively and fibre laws on random values.

    Structural checks: ``dom`` is a subgroupoid, ``phi`` a star-bijective
    functor.  Fibre checks per trial, on a random composable pair of ``dom``:
    products, star and contractivity of ``beta``.
    """
    rep = Report("fell morphism")
    structure = rep.check("structure", "dom is a subgroupoid and phi a star-bijective functor")
    ok, detail = True, None
    if not m.dom:
        # the zero morphism
        structure.record_bool(True)
        return rep
    if not is_subgroupoid(m.target.base, m.dom):
        ok, detail = False, "dom is not a subgroupoid"
    else:
        try:
            f = m.functor
            if not check_star_bijective(f):
                ok, detail = False, "phi is not star-bijective"
        except InvalidMorphism as exc:
            ok, detail = False, str(exc)
    structure.record_bool(ok, None if ok else {"detail": detail})
    if not ok:
        return rep

    prod = rep.check("fibre_products", "beta(v) beta(w) = beta(v w)")
    starc = rep.check("fibre_star", "beta(v*) = beta(v)*")
    contr = rep.check("fibre_contractive", "|beta(v)| <= |v|")
    sub, ids = m.sub
    rng = np.random.default_rng(seed)
    i_arr, j_arr, k_arr = sub.pairs
    src, tgt = m.source, m.target
    for t in range(trials):
        p = int(rng.integers(i_arr.shape[0]))
        ka, kb, kab = int(i_arr[p]), int(j_arr[p]), int(k_arr[p])
        ga, gb = int(m.phi[ka]), int(m.phi[kb])
        v = random_fiber_value(src, ga, rng)
        w = random_fiber_value(src, gb, rng)
        bv, bw = m.fibre_map(ka, v), m.fibre_map(kb, w)
        lhs = tgt.twist(ids[ka], ids[kb]) * (bv @ bw)
        rhs = m.fibre_map(kab, src.twist(ga, gb) * (v @ w))
        scale = operator_norm(v) * operator_norm(w)
        prod.record(max(0.0, float(np.max(np.abs(lhs - rhs))) - tol.bound(scale)), {"trial": t, "pair": [ids[ka], ids[kb]]})

        kinv = int(sub.inverse[ka])
        v_star = src.star_twist[ga] * v.conj().T
        lhs = m.fibre_map(kinv, v_star)
        rhs = tgt.star_twist[ids[ka]] * bv.conj().T
        nv = operator_norm(v)
        starc.record(max(0.0, float(np.max(np.abs(lhs - rhs))) - tol.bound(nv)), {"trial": t, "arrow": ids[ka]})
        contr.record_leq(operator_norm(bv), nv, {"trial": t, "arrow": ids[ka]}, tol)
    return rep


def _require_valid(m: FellMorphism) -> None:
    if not m.dom:
        return
    try:
        m.pulled
    except (MorphismError, GroupoidError) as exc:
        raise InvalidMorphism(str(exc)) from exc


def apply_fibre_morphism(m: FellMorphism, p: Section) -> Section:
    """Apply ``beta`` to a section of the pullback bundle, zero off ``dom``."""
    _require_valid(m)
    if not m.dom:
        return Section.zeros(m.target)
    if not p.bundle.same_as(m.pulled):
        raise BundleMismatch("section does not live on the pullback bundle of this morphism")
    L, R = m._padded
    vals = np.matmul(np.matmul(L, p.values), R)
    out = np.zeros((m.target.base.n, m.target.dmax, m.target.dmax), dtype=np.complex128)
    out[list(m.dom)] = vals
    return Section(m.target, out)


def algebraize(m: FellMorphism) -> Callable[[Section], Section]:
    """The induced map on section algebras, ``a -> beta(pullback(a))``."""
    _require_valid(m)

    def apply(a: Section) -> Section:
        if not m.dom:
            if not a.bundle.same_as(m.source):
                raise BundleMismatch("section does not live on the source bundle")
            return Section.zeros(m.target)
        return apply_fibre_morphism(m, pullback_section(m.functor, m.source, a, target=m.pulled))

    return apply


def compose_fell(m2: FellMorphism, m1: FellMorphism) -> FellMorphism:
    """``m2 o m1`` for ``m1: rho -> rho1`` and ``m2: rho1 -> rho2``.

    An empty composite domain gives the zero morphism.  The composite lives on the arrows of ``m2.dom`` whose ``phi2`` image lies
    in ``m1.dom``; its functor is ``phi1 o phi2`` and its fibre map over
    ``g2`` is ``beta2[g2] o beta1[phi2(g2)]``.
    """
    if not m2.source.same_as(m1.target):
        raise NotComposableMorphisms("m2 does not start where m1 ends")
    dom, phi, left, right = [], [], [], []
    for k2, g2 in enumerate(m2.dom):
        g1 = int(m2.phi[k2])
        k1 = m1._index.get(g1)
        if k1 is None:
            continue
        dom.append(g2)
        phi.append(int(m1.phi[k1]))
        left.append(np.asarray(m2.left[k2]) @ np.asarray(m1.left[k1]))
        right.append(np.asarray(m1.right[k1]) @ np.asarray(m2.right[k2]))
    return FellMorphism(m1.source, m2.target, tuple(dom), np.array(phi), tuple(left), tuple(right))
