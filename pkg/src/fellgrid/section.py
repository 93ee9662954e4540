"""
Sections of a Fell bundle and their norms.

A :class:`Section` stores one fibre value per arrow in a padded complex
array of shape ``(n, D, D)`` where ``D`` is the largest fibre dimension.
Only the top-left ``shape(g)`` block of slice ``g`` is live; the padding is
kept at zero, which lets products of padded blocks agree with products of
the true blocks.

The norms
---------
Write ``G_x`` for the arrows with source ``x``.

* ``norm_inf`` : largest fibre norm.
* ``norm_1``   : ``max_x  sum_{g in G_x} |a(g)|``.
* ``norm_2``   : ``max_x  |sum_{g in G_x} a(g)* a(g)|^(1/2)``.
* ``norm_i``   : ``max(norm_1(a), norm_1(a*))``.
* ``norm_b``   : operator norm of left convolution by ``a``, computed as
  ``max_x |REP_x(a)|`` where ``REP_x(a)`` has blocks
  ``twist(d g^-1, g) a(d g^-1)`` indexed by ``d, g in G_x``.

See ``docs/norm_b_derivation.md`` for why ``REP_x`` gives the operator norm.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .bundle import BundleError, BundleMismatch, FellBundle, FiberElement
from .linalg import DEFAULT_TOL, Tolerance, as_cmatrix, operator_norm, operator_norms

__all__ = [
    "Section",
    "convolve",
    "star",
    "restrict",
    "restrict_source",
    "restrict_range",
    "diagonal",
    "inner_product",
    "identity_section",
    "norm_inf",
    "norm_1",
    "norm_2",
    "norm_i",
    "norm_b",
    "all_norms",
    "rep_matrices",
    "norm_b_oracle",
    "two_sided_ratio",
]


class Section:
    """A section of ``bundle``: one fibre value per arrow.

    Parameters
    ----------
    bundle : FellBundle
    values : ndarray, optional
        Padded array of shape ``(n, D, D)``; zeros if omitted.  Entries in the
        padding must be zero.
    """

    __slots__ = ("bundle", "values", "__weakref__")

    def __init__(self, bundle: FellBundle, values: np.ndarray | None = None, *, _trusted: bool = False):
        self.bundle = bundle
        n, d = bundle.base.n, bundle.dmax
        if values is None:
            values = np.zeros((n, d, d), dtype=np.complex128)
        elif not _trusted:
            values = np.array(values, dtype=np.complex128)
            if values.shape != (n, d, d):
                raise BundleError(f"padded values must have shape {(n, d, d)}, got {values.shape}")
            if np.any(values[~bundle.mask] != 0):
                raise BundleError("nonzero entries outside the fibre shapes")
        self.values = values
        self.values.flags.writeable = False

    # -- construction --------------------------------------------------------

    @classmethod
    def zeros(cls, bundle: FellBundle) -> "Section":
        return cls(bundle)

    @classmethod
    def from_values(cls, bundle: FellBundle, values: Mapping[int, object]) -> "Section":
        """Build from ``{arrow: matrix}``; omitted arrows are zero."""
        n, d = bundle.base.n, bundle.dmax
        out = np.zeros((n, d, d), dtype=np.complex128)
        for g, v in values.items():
            g = int(g)
            if not 0 <= g < n:
                raise BundleError(f"arrow {g} out of range")
            v = as_cmatrix(v)
            r, c = bundle.shape(g)
            if v.shape != (r, c):
                raise BundleError(f"value of shape {v.shape} does not fit fibre {(r, c)} over arrow {g}")
            out[g, :r, :c] = v
        return cls(bundle, out, _trusted=True)

    @classmethod
    def from_pair_matrix(cls, bundle: FellBundle, m) -> "Section":
        """Section of a line bundle over ``pair_groupoid(k)`` with value ``m[i, j]`` at arrow ``(i, j)``.

        Arrow ``(i, j)`` is assumed to have id ``i*k + j``.
        """
        m = np.asarray(m, dtype=np.complex128)
        k = m.shape[0]
        if m.shape != (k, k) or bundle.base.n != k * k or bundle.dmax != 1:
            raise BundleError("from_pair_matrix needs a k x k matrix and a line bundle over pair_groupoid(k)")
        return cls(bundle, m.reshape(k * k, 1, 1).copy(), _trusted=True)

    def _new(self, values: np.ndarray) -> "Section":
        return Section(self.bundle, values, _trusted=True)

    # -- access ----------------------------------------------------------------

    def value(self, g: int) -> np.ndarray:
        r, c = self.bundle.shape(g)
        return self.values[g, :r, :c].copy()

    def element(self, g: int) -> FiberElement:
        return FiberElement(int(g), self.value(g))

    def as_dict(self, nonzero_only: bool = True) -> dict[int, np.ndarray]:
        out = {}
        for g in range(self.bundle.base.n):
            v = self.value(g)
            if not nonzero_only or np.any(v != 0):
                out[g] = v
        return out

    def to_pair_matrix(self) -> np.ndarray:
        n = self.bundle.base.n
        k = int(round(np.sqrt(n)))
        return self.values[:, 0, 0].reshape(k, k).copy()

    @property
    def support(self) -> frozenset:
        return frozenset(np.flatnonzero(np.any(self.values != 0, axis=(1, 2))).tolist())

    # -- arithmetic ------------------------------------------------------------

    def _check(self, other: "Section") -> None:
        if not isinstance(other, Section):
            raise TypeError("expected a Section")
        if not self.bundle.same_as(other.bundle):
            raise BundleMismatch("sections live on different bundles")

    def __add__(self, other):
        self._check(other)
        return self._new(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.values - other.values)

    def __neg__(self):
        return self._new(-self.values)

    def __mul__(self, z):
        if isinstance(z, Section):
            return NotImplemented
        return self._new(complex(z) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, z):
        return self._new(self.values / complex(z))

    def __matmul__(self, other):
        return convolve(self, other)

    def array_equal(self, other: "Section") -> bool:
        return self.bundle.same_as(other.bundle) and np.array_equal(self.values, other.values)

    def max_abs_diff(self, other: "Section") -> float:
        self._check(other)
        return float(np.max(np.abs(self.values - other.values))) if self.values.size else 0.0

    def allclose(self, other: "Section", tol: Tolerance = DEFAULT_TOL) -> bool:
        scale = max(float(np.max(np.abs(self.values), initial=0.0)), float(np.max(np.abs(other.values), initial=0.0)))
        return self.max_abs_diff(other) <= tol.bound(scale)

    def __repr__(self):
        return f"Section({self.bundle!r}, support={len(self.support)})"


# -- algebra -------------------------------------------------------------------


def convolve(a: Section, b: Section) -> Section:
    """``(ab)(g) = sum over g = st of twist(s, t) a(s) b(t)``.

    The factorizations of ``g`` are ``(g t^-1, t)`` with ``t`` ranging over the
    arrows with the same source as ``g``.
    """
    a._check(b)
    bundle = a.bundle
    i, j, _ = bundle.base.pairs
    starts = bundle.base.pair_starts
    tw = bundle.pair_twist
    if bundle.dmax == 1:
        terms = a.values[i, 0, 0] * b.values[j, 0, 0]
        if not bundle.trivial_twist:
            terms = terms * tw
        out = np.add.reduceat(terms, starts).reshape(-1, 1, 1)
    else:
        terms = np.matmul(a.values[i], b.values[j])
        if not bundle.trivial_twist:
            terms = terms * tw[:, None, None]
        out = np.add.reduceat(terms, starts, axis=0)
    return Section(bundle, out, _trusted=True)


def star(a: Section) -> Section:
    """``a*(g) = a(g^-1)*`` with the fibre involution of the bundle."""
    bundle = a.bundle
    inv = bundle.base.inverse
    out = np.conj(np.swapaxes(a.values[inv], 1, 2))
    if not bundle.trivial_twist:
        out = out * bundle.star_twist[inv][:, None, None]
    return Section(bundle, np.ascontiguousarray(out), _trusted=True)


def restrict(a: Section, arrows: Iterable[int]) -> Section:
    """Zero ``a`` outside ``arrows``."""
    keep = np.zeros(a.bundle.base.n, dtype=bool)
    idx = np.fromiter((int(g) for g in arrows), dtype=np.int64)
    keep[idx] = True
    return Section(a.bundle, np.where(keep[:, None, None], a.values, 0), _trusted=True)


def restrict_source(a: Section, units: Iterable[int]) -> Section:
    """Keep only arrows whose source lies in ``units``."""
    g = a.bundle.base
    return restrict(a, np.flatnonzero(np.isin(g.source, list(units))))


def restrict_range(a: Section, units: Iterable[int]) -> Section:
    g = a.bundle.base
    return restrict(a, np.flatnonzero(np.isin(g.range, list(units))))


def diagonal(a: Section) -> Section:
    return restrict(a, a.bundle.base.units)


def inner_product(a: Section, b: Section) -> Section:
    """Module inner product ``<a, b> = diagonal(a* b)``."""
    a._check(b)
    return diagonal(convolve(star(a), b))


def identity_section(bundle: FellBundle) -> Section:
    """Identity matrix on every unit, zero elsewhere."""
    return Section.from_values(bundle, {x: np.eye(bundle.unit_dim(x)) for x in bundle.base.units})


# -- norms -----------------------------------------------------------------------


def _fibre_norms(a: Section) -> np.ndarray:
    if a.bundle.dmax == 1:
        return np.abs(a.values[:, 0, 0])
    return operator_norms(a.values)


def norm_inf(a: Section) -> float:
    return float(_fibre_norms(a).max(initial=0.0))


def norm_1(a: Section) -> float:
    g = a.bundle.base
    sums = np.bincount(g.unit_index, weights=_fibre_norms(a), minlength=len(g.units))
    return float(sums.max(initial=0.0))


def norm_2(a: Section) -> float:
    # a(g)* a(g) on the source fibre; for line bundles the twists cancel to |a(g)|^2
    g = a.bundle.base
    if a.bundle.dmax == 1:
        sums = np.bincount(g.unit_index, weights=np.abs(a.values[:, 0, 0]) ** 2, minlength=len(g.units))
        return float(np.sqrt(sums.max(initial=0.0)))
    gram = np.einsum("nki,nkj->nij", a.values.conj(), a.values)
    per_unit = np.zeros((len(g.units),) + gram.shape[1:], dtype=np.complex128)
    np.add.at(per_unit, g.unit_index, gram)
    return float(np.sqrt(operator_norms(per_unit).max(initial=0.0)))


def norm_i(a: Section) -> float:
    return max(norm_1(a), norm_1(star(a)))


@dataclass(frozen=True)
class _RepBlock:
    unit: int
    arrows: np.ndarray  # G_x
    alpha: np.ndarray  # alpha[d, g] = arrows[d] * arrows[g]^-1
    twist: np.ndarray | None  # twist(alpha[d, g], arrows[g])
    keep: np.ndarray | None  # live rows/columns of the padded block matrix


_PLANS: "weakref.WeakKeyDictionary[FellBundle, list[_RepBlock]]" = weakref.WeakKeyDictionary()


def _rep_plan(bundle: FellBundle) -> list[_RepBlock]:
    plan = _PLANS.get(bundle)
    if plan is not None:
        return plan
    g = bundle.base
    d = bundle.dmax
    plan = []
    for x in g.units:
        arrows = g.by_source[x]
        inv = g.inverse[arrows]
        alpha = np.array([[g.mul(int(p), int(q)) for q in inv] for p in arrows], dtype=np.int64)
        twist = None
        if not bundle.trivial_twist:
            twist = np.array(
                [[bundle.twist(int(alpha[r, c]), int(arrows[c])) for c in range(len(arrows))] for r in range(len(arrows))],
                dtype=np.complex128,
            )
        keep = None
        if d > 1:
            # block (d, g) has shape dim(range d) x dim(range g)
            rows = bundle.row_dim[arrows]
            keep = np.concatenate([k * d + np.arange(r) for k, r in enumerate(rows)])
        plan.append(_RepBlock(x, arrows, alpha, twist, keep))
    _PLANS[bundle] = plan
    return plan


def rep_matrices(a: Section) -> dict[int, np.ndarray]:
    """The left regular representation blocks ``REP_x(a)`` for every unit ``x``."""
    bundle = a.bundle
    d = bundle.dmax
    out = {}
    for blk in _rep_plan(bundle):
        m = len(blk.arrows)
        if d == 1:
            rep = a.values[blk.alpha, 0, 0]
            if blk.twist is not None:
                rep = rep * blk.twist
        else:
            tiles = a.values[blk.alpha]
            if blk.twist is not None:
                tiles = tiles * blk.twist[:, :, None, None]
            rep = tiles.transpose(0, 2, 1, 3).reshape(m * d, m * d)
            rep = rep[np.ix_(blk.keep, blk.keep)]
        out[blk.unit] = np.ascontiguousarray(rep)
    return out


def norm_b(a: Section, backend: str = "jacobi") -> float:
    """Operator norm of left convolution by ``a`` on the section module."""
    if not np.any(a.values):
        return 0.0
    reps = rep_matrices(a)
    by_size: dict[int, list[np.ndarray]] = {}
    for rep in reps.values():
        by_size.setdefault(rep.shape[0], []).append(rep)
    best = 0.0
    for mats in by_size.values():
        best = max(best, float(operator_norms(np.stack(mats), backend=backend).max()))
    return best


def all_norms(a: Section) -> dict[str, float]:
    return {"inf": norm_inf(a), "1": norm_1(a), "2": norm_2(a), "b": norm_b(a), "i": norm_i(a)}


# -- independent lower bounds ----------------------------------------------------


def _random_full(bundle: FellBundle, rng: np.random.Generator) -> Section:
    shape = (bundle.base.n, bundle.dmax, bundle.dmax)
    v = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * bundle.mask
    return Section(bundle, v, _trusted=True)


def norm_b_oracle(a: Section, trials: int = 8, seed: int = 0, iterations: int = 200) -> float:
    """Lower bound for ``norm_b(a)`` from the ratio ``|af|_2 / |f|_2``.

    Samples ``trials`` random sections ``f``, then refines the best one by
    power iteration ``f <- a*(af)`` normalized in the 2-norm.  Uses only
    convolution, the involution and ``norm_2``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not np.any(a.values):
        return 0.0
    rng = np.random.default_rng(seed)
    a_star = star(a)
    best, best_f = 0.0, None
    for _ in range(trials):
        f = _random_full(a.bundle, rng)
        ratio = norm_2(convolve(a, f)) / norm_2(f)
        if ratio > best or best_f is None:
            best, best_f = ratio, f
    f = best_f
    for _ in range(iterations):
        af = convolve(a, f)
        n_f = norm_2(f)
        ratio = norm_2(af) / n_f
        best = max(best, ratio)
        nxt = convolve(a_star, af)
        n_next = norm_2(nxt)
        if n_next == 0.0:
            break
        f = nxt / n_next
    return best


def two_sided_ratio(a: Section, f: Section, g: Section) -> float:
    """``norm_inf(g* a f) / (norm_2(g) norm_2(f))`` with 0/0 read as 0."""
    den = norm_2(g) * norm_2(f)
    if den == 0.0:
        return 0.0
    return norm_inf(convolve(convolve(star(g), a), f)) / den
