"""
Fell bundles over finite groupoids.

Two kinds are provided behind one interface:

``MatrixBundle``
    The fibre over an arrow ``g`` is the space of ``dim(range g) x dim(source g)``
    complex matrices; products are matrix products and the involution is the
    conjugate transpose.
``TwistedLineBundle``
    Every fibre is one-dimensional (stored as a ``1 x 1`` matrix) and the
    product of fibres over ``(a, b)`` picks up a unit-modulus factor
    ``sigma(a, b)`` from a normalized 2-cocycle.

Both kinds share the scalar twist interface: ``twist(a, b)`` is the factor
multiplying ``a.value @ b.value`` (always 1 for matrix bundles) and
``star_twist[g]`` the factor multiplying ``value^H`` under the involution.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .groupoid import Groupoid
from .linalg import DEFAULT_TOL, NotPositive, Tolerance, as_cmatrix, loewner_leq, operator_norm, psd_power
from .report import Report

__all__ = [
    "BundleError",
    "NotComposable",
    "BundleMismatch",
    "FiberElement",
    "FellBundle",
    "MatrixBundle",
    "TwistedLineBundle",
    "fiber_product",
    "fiber_star",
    "random_fiber_value",
    "validate_fell",
]


class BundleError(ValueError):
    pass


class NotComposable(BundleError):
    pass


class BundleMismatch(BundleError):
    pass


@dataclass(frozen=True, eq=False)
class FiberElement:
    """A matrix ``value`` sitting in the fibre over ``arrow``."""

    arrow: int
    value: np.ndarray

    def __repr__(self):
        return f"FiberElement(arrow={self.arrow}, shape={self.value.shape})"


class FellBundle:
    """Common interface; use :class:`MatrixBundle` or :class:`TwistedLineBundle`."""

    kind = "abstract"
    base: Groupoid
    row_dim: np.ndarray
    col_dim: np.ndarray

    @property
    def dmax(self) -> int:
        return int(max(self.row_dim.max(), self.col_dim.max()))

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean ``(n, D, D)`` array marking the live entries of padded fibre values."""
        d = self.dmax
        rows = np.arange(d)[None, :, None] < self.row_dim[:, None, None]
        cols = np.arange(d)[None, None, :] < self.col_dim[:, None, None]
        return rows & cols

    def shape(self, arrow: int) -> tuple[int, int]:
        return int(self.row_dim[arrow]), int(self.col_dim[arrow])

    def unit_dim(self, x: int) -> int:
        return int(self.row_dim[x])

    def twist(self, a: int, b: int) -> complex:
        return 1.0 + 0.0j

    @cached_property
    def pair_twist(self) -> np.ndarray:
        """Twist factors aligned with ``base.pairs``."""
        return np.ones(self.base.pairs[0].shape[0], dtype=np.complex128)

    @cached_property
    def star_twist(self) -> np.ndarray:
        return np.ones(self.base.n, dtype=np.complex128)

    @property
    def trivial_twist(self) -> bool:
        return True

    # -- fibre operations ----------------------------------------------------

    def element(self, arrow: int, value) -> FiberElement:
        value = as_cmatrix(value)
        if value.shape != self.shape(arrow):
            raise BundleError(f"value of shape {value.shape} does not fit fibre {self.shape(arrow)} over arrow {arrow}")
        return FiberElement(int(arrow), value)

    def product(self, a: FiberElement, b: FiberElement) -> FiberElement:
        ab = self.base.mul(a.arrow, b.arrow)
        if ab is None:
            raise NotComposable(f"arrows {a.arrow} and {b.arrow} are not composable")
        return FiberElement(ab, self.twist(a.arrow, b.arrow) * (a.value @ b.value))

    def star(self, a: FiberElement) -> FiberElement:
        inv = int(self.base.inverse[a.arrow])
        return FiberElement(inv, self.star_twist[a.arrow] * a.value.conj().T)

    def unit_element(self, x: int) -> FiberElement:
        return FiberElement(int(x), np.eye(self.unit_dim(x), dtype=np.complex128))

    def same_as(self, other: "FellBundle") -> bool:
        return self is other or self == other


class MatrixBundle(FellBundle):
    """Matrix bundle over ``base`` with fibre dimension ``dims[x]`` at unit ``x``.

    ``dims`` is either a mapping from unit id to dimension or a sequence
    aligned with ``base.units``.
    """

    kind = "matrix"

    def __init__(self, base: Groupoid, dims):
        self.base = base
        if isinstance(dims, Mapping):
            try:
                d = {int(u): int(dims[u]) for u in base.units}
            except KeyError as exc:
                raise BundleError(f"no dimension given for unit {exc.args[0]}") from None
            extra = set(int(k) for k in dims) - set(base.units)
            if extra:
                raise BundleError(f"dimensions given for non-units {sorted(extra)}")
        else:
            dims = list(dims)
            if len(dims) != len(base.units):
                raise BundleError("dimension list must have one entry per unit")
            d = {u: int(k) for u, k in zip(base.units, dims)}
        if min(d.values()) < 1:
            raise BundleError("fibre dimensions must be at least 1")
        self.dims = d
        per_unit = np.zeros(base.n, dtype=np.int64)
        for u, k in d.items():
            per_unit[u] = k
        self.row_dim = per_unit[base.range]
        self.col_dim = per_unit[base.source]

    def __repr__(self):
        return f"MatrixBundle({self.base!r}, dims={[self.dims[u] for u in self.base.units]})"

    def __eq__(self, other):
        if not isinstance(other, MatrixBundle):
            return NotImplemented
        return self is other or (self.dims == other.dims and self.base == other.base)

    __hash__ = object.__hash__


class TwistedLineBundle(FellBundle):
    """Line bundle twisted by a 2-cocycle.

    Parameters
    ----------
    base : Groupoid
    cocycle : mapping ``(a, b) -> complex``, optional
        Values on composable pairs; pairs not listed get 1.  The constructor
        only checks that keys are composable; the cocycle laws are checked
        by :func:`validate_fell`.

    Notes
    -----
    The involution is ``v -> conj(sigma(g, g^-1)) * conj(v)`` on the fibre
    over ``g``, which makes ``b b*`` a nonnegative number on the range unit.
    """

    kind = "twisted_line"

    def __init__(self, base: Groupoid, cocycle: Mapping | None = None):
        self.base = base
        sigma = {}
        for (a, b), z in (cocycle or {}).items():
            a, b = int(a), int(b)
            if base.mul(a, b) is None:
                raise BundleError(f"cocycle given on non-composable pair ({a}, {b})")
            z = complex(z)
            if z != 1:
                sigma[(a, b)] = z
        self.cocycle = sigma
        self.row_dim = np.ones(base.n, dtype=np.int64)
        self.col_dim = np.ones(base.n, dtype=np.int64)

    def __repr__(self):
        return f"TwistedLineBundle({self.base!r}, nontrivial={len(self.cocycle)})"

    def __eq__(self, other):
        if not isinstance(other, TwistedLineBundle):
            return NotImplemented
        return self is other or (self.cocycle == other.cocycle and self.base == other.base)

    __hash__ = object.__hash__

    def twist(self, a: int, b: int) -> complex:
        return self.cocycle.get((int(a), int(b)), 1.0 + 0.0j)

    @cached_property
    def pair_twist(self) -> np.ndarray:
        i, j, _ = self.base.pairs
        return np.array([self.twist(a, b) for a, b in zip(i.tolist(), j.tolist())], dtype=np.complex128)

    @cached_property
    def star_twist(self) -> np.ndarray:
        inv = self.base.inverse
        return np.array([np.conj(self.twist(g, int(inv[g]))) for g in range(self.base.n)], dtype=np.complex128)

    @property
    def trivial_twist(self) -> bool:
        return not self.cocycle


def fiber_product(bundle: FellBundle, a: FiberElement, b: FiberElement) -> FiberElement:
    return bundle.product(a, b)


def fiber_star(bundle: FellBundle, a: FiberElement) -> FiberElement:
    return bundle.star(a)


def random_fiber_value(bundle: FellBundle, arrow: int, rng: np.random.Generator, scale: float | None = None) -> np.ndarray:
    """Complex Gaussian matrix of the fibre shape, with a random overall scale in [0.1, 10]."""
    r, c = bundle.shape(arrow)
    if scale is None:
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
    return scale * (rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))) / np.sqrt(2.0)


# -- validation ------------------------------------------------------------


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


def _validate_cocycle(bundle: TwistedLineBundle, rep: Report, tol: Tolerance) -> None:
    g = bundle.base
    mod = rep.check("cocycle_modulus", "|sigma(a,b)| = 1 on composable pairs")
    norm = rep.check("cocycle_normalized", "sigma(r(a),a) = sigma(a,s(a)) = 1")
    ident = rep.check("cocycle_identity", "sigma(a,b) sigma(ab,c) = sigma(a,bc) sigma(b,c)")
    sig = bundle.twist
    triples = g.product_triples()
    for a, b, _ in triples:
        mod.record(max(0.0, abs(abs(sig(a, b)) - 1.0) - tol.atol), {"pair": [a, b]})
    for a in range(g.n):
        r, s = int(g.range[a]), int(g.source[a])
        norm.record(max(0.0, max(abs(sig(r, a) - 1.0), abs(sig(a, s) - 1.0)) - tol.atol), {"arrow": a})
    right: dict[int, list[tuple[int, int]]] = {}
    for b, c, bc in triples:
        right.setdefault(b, []).append((c, bc))
    for a, b, ab in triples:
        for c, bc in right.get(b, ()):
            lhs = sig(a, b) * sig(ab, c)
            rhs = sig(a, bc) * sig(b, c)
            ident.record(max(0.0, abs(lhs - rhs) - tol.atol), {"triple": [a, b, c]})


def validate_fell(bundle: FellBundle, trials: int = 200, seed: int = 0, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Randomized check of the Fell bundle axioms on fibre elements.

    Each trial draws a composable pair ``(a, b)`` of arrows with random fibre
    values and checks the C*-identity, existence of a square root of ``b*b``
    on the unit fibre, submultiplicativity, isometry and involutivity of the
    star, ``(ab)* = b* a*`` and the order inequality
    ``(ab)*(ab) <= |a|^2 b*b``.  Twisted line bundles additionally get an
    exhaustive check of the cocycle laws.
    """
    rep = Report("fell bundle axioms")
    if isinstance(bundle, TwistedLineBundle):
        _validate_cocycle(bundle, rep, tol)
    g = bundle.base
    i_arr, j_arr, _ = g.pairs
    rng = np.random.default_rng(seed)
    cstar = rep.check("cstar_identity", "|b*b| = |b|^2 on every fibre")
    root = rep.check("square_root", "b*b = a*a for some a in the source unit fibre")
    positive = rep.check("positive_square", "b*b is positive in the source unit fibre")
    submult = rep.check("submultiplicative", "|ab| <= |a| |b|")
    iso = rep.check("star_isometry", "|b*| = |b|")
    invol = rep.check("star_involution", "b** = b")
    anti = rep.check("star_antimultiplicative", "(ab)* = b* a*")
    mid = rep.check("mid_below", "b* a* a b <= |a|^2 b* b")
    for t in range(trials):
        k = int(rng.integers(i_arr.shape[0]))
        a_arrow, b_arrow = int(i_arr[k]), int(j_arr[k])
        a = bundle.element(a_arrow, random_fiber_value(bundle, a_arrow, rng))
        b = bundle.element(b_arrow, random_fiber_value(bundle, b_arrow, rng))
        w = {"trial": t, "pair": [a_arrow, b_arrow]}
        na, nb = operator_norm(a.value), operator_norm(b.value)

        bs = bundle.star(b)
        bsb = bundle.product(bs, b)
        cstar.record_close(operator_norm(bsb.value), nb * nb, w, tol)
        ok_pos = True
        try:
            half = psd_power(bsb.value, 0.5)
        except NotPositive:
            ok_pos = False
            half = np.zeros_like(bsb.value)
        positive.record_bool(ok_pos and bsb.arrow == int(g.source[b_arrow]), w)
        r = bundle.element(bsb.arrow, half)
        rsr = bundle.product(bundle.star(r), r)
        root.record(max(0.0, _max_abs(rsr.value - bsb.value) - tol.bound(nb * nb)), w)

        ab = bundle.product(a, b)
        nab = operator_norm(ab.value)
        submult.record_leq(nab, na * nb, w, tol)
        iso.record_close(operator_norm(bundle.star(a).value), na, w, tol)
        back = bundle.star(bundle.star(a))
        invol.record(max(0.0, _max_abs(back.value - a.value) - tol.bound(na)) + (back.arrow != a.arrow), w)
        lhs = bundle.star(ab)
        rhs = bundle.product(bs, bundle.star(a))
        anti.record(max(0.0, _max_abs(lhs.value - rhs.value) - tol.bound(nab)) + (lhs.arrow != rhs.arrow), w)

        abab = bundle.product(bundle.star(ab), ab).value
        bound = (na * na) * bsb.value
        m_tol = tol.bound(nab * nab, na * na * nb * nb)
        mid.record_bool(loewner_leq(0.5 * (abab + abab.conj().T), 0.5 * (bound + bound.conj().T), m_tol), w)
    return rep
