"""
Finite groupoids as partial product tables.

Arrows are the integers ``0..n-1``.  Units are arrows fixed by ``source``,
``range`` and ``inverse``.  The product ``a*b`` is defined exactly when
``source[a] == range[b]`` and composes right to left, so that
``source(ab) = source(b)`` and ``range(ab) = range(a)``.

Arrow subsets are passed around as ``frozenset`` objects of arrow ids.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GroupoidError",
    "InvalidGroupTable",
    "InvalidAction",
    "NotASubgroupoid",
    "Groupoid",
    "LawViolation",
    "ValidationReport",
    "validate",
    "pair_groupoid",
    "pair_id",
    "cyclic_group",
    "from_group",
    "disjoint_union",
    "direct_product",
    "action_groupoid",
    "is_slice",
    "set_product",
    "is_subgroupoid",
    "generated_subgroupoid",
    "saturation_split",
    "induced_subgroupoid",
]

DENSE_LIMIT = 256
UNDEFINED = -1


class GroupoidError(ValueError):
    pass


class InvalidGroupTable(GroupoidError):
    pass


class InvalidAction(GroupoidError):
    pass


class NotASubgroupoid(GroupoidError):
    pass


class Groupoid:
    """A finite groupoid given by its structure tables.

    Parameters
    ----------
    units : iterable of int
        Ids of the unit arrows.
    source, range, inverse : sequence of int
        Per-arrow tables, each of length ``n``.
    product : iterable of (a, b, ab) triples, or an ``(n, n)`` integer array
        The partial product; missing pairs (or ``-1`` entries) are undefined.
    labels : sequence, optional
        Human-readable names for the arrows, used only for display.

    Only structural well-formedness (lengths, id ranges) is checked here;
    the groupoid laws are checked by :func:`validate`.  The product is held
    in a dense table up to 256 arrows and in a dict above that.
    """

    def __init__(self, units, source, range, inverse, product, labels=None):
        self.source = np.asarray(source, dtype=np.int64)
        self.range = np.asarray(range, dtype=np.int64)
        self.inverse = np.asarray(inverse, dtype=np.int64)
        n = self.source.shape[0]
        if n < 1:
            raise GroupoidError("a groupoid needs at least one arrow")
        for name, table in (("range", self.range), ("inverse", self.inverse)):
            if table.shape != (n,):
                raise GroupoidError(f"{name} table has length {table.shape}, expected {n}")
        self.units = tuple(sorted({int(u) for u in units}))
        for name, table in (("source", self.source), ("range", self.range), ("inverse", self.inverse)):
            if table.min() < 0 or table.max() >= n:
                raise GroupoidError(f"{name} table refers to an arrow outside 0..{n - 1}")
        if not self.units or self.units[0] < 0 or self.units[-1] >= n:
            raise GroupoidError("unit ids must be non-empty and in range")
        self.n = n
        self.labels = tuple(labels) if labels is not None else None

        if isinstance(product, np.ndarray) and product.ndim == 2:
            if product.shape != (n, n):
                raise GroupoidError("dense product table must be n x n")
            triples = [(int(a), int(b), int(product[a, b])) for a, b in zip(*np.nonzero(product >= 0))]
        else:
            triples = [(int(a), int(b), int(c)) for a, b, c in product]
        for a, b, c in triples:
            if not (0 <= a < n and 0 <= b < n and 0 <= c < n):
                raise GroupoidError(f"product entry {(a, b, c)} refers to an arrow out of range")
        if n <= DENSE_LIMIT:
            table = np.full((n, n), UNDEFINED, dtype=np.int64)
            for a, b, c in triples:
                table[a, b] = c
            self._table = table
            self._map = None
        else:
            self._table = None
            self._map = {(a, b): c for a, b, c in triples}
        self._triples = triples

    def __repr__(self):
        return f"Groupoid(n={self.n}, units={len(self.units)})"

    def __eq__(self, other):
        if not isinstance(other, Groupoid):
            return NotImplemented
        return (
            self.n == other.n
            and self.units == other.units
            and np.array_equal(self.source, other.source)
            and np.array_equal(self.range, other.range)
            and np.array_equal(self.inverse, other.inverse)
            and sorted(self._triples) == sorted(other._triples)
        )

    def __hash__(self):
        return hash((self.n, self.units, self.source.tobytes(), self.range.tobytes()))

    def mul(self, a: int, b: int) -> int | None:
        """Product ``ab`` or ``None`` when undefined."""
        if self._table is not None:
            c = int(self._table[a, b])
            return None if c == UNDEFINED else c
        return self._map.get((int(a), int(b)))

    def product_triples(self) -> list[tuple[int, int, int]]:
        return list(self._triples)

    @cached_property
    def unit_set(self) -> frozenset:
        return frozenset(self.units)

    @cached_property
    def arrows(self) -> frozenset:
        return frozenset(range(self.n))

    @cached_property
    def pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(I, J, K)`` listing every composable pair with ``K = I*J``.

        Sorted by ``K`` so per-arrow sums can use ``np.add.reduceat``.
        """
        if self._triples:
            t = np.array(sorted(self._triples, key=lambda x: (x[2], x[1], x[0])), dtype=np.int64)
            return t[:, 0].copy(), t[:, 1].copy(), t[:, 2].copy()
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()

    @cached_property
    def pair_starts(self) -> np.ndarray:
        """Offsets into ``pairs`` where each product value ``K`` starts.

        Every arrow ``g`` factors at least as ``range(g) * g``, so in a valid
        groupoid this has exactly ``n`` entries.
        """
        k = self.pairs[2]
        starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]]) if k.size else np.zeros(0, dtype=np.int64)
        if starts.shape[0] != self.n:
            raise GroupoidError("some arrow has no factorization; validate the groupoid first")
        return starts

    @cached_property
    def unit_index(self) -> np.ndarray:
        """Per arrow, the position of its source unit in ``units``."""
        return np.searchsorted(np.asarray(self.units), self.source)

    @cached_property
    def by_source(self) -> dict[int, np.ndarray]:
        """Unit ``x`` -> sorted arrow ids with source ``x``."""
        return {x: np.flatnonzero(self.source == x) for x in self.units}

    @cached_property
    def by_range(self) -> dict[int, np.ndarray]:
        return {x: np.flatnonzero(self.range == x) for x in self.units}

    def label(self, a: int):
        return self.labels[a] if self.labels is not None else a


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class LawViolation:
    law: str
    witness: tuple
    detail: str = ""


@dataclass
class ValidationReport:
    checked: list[str] = field(default_factory=list)
    violations: list[LawViolation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def first(self) -> LawViolation | None:
        return self.violations[0] if self.violations else None

    @property
    def failed_laws(self) -> list[str]:
        return [v.law for v in self.violations]

    def __bool__(self):
        return self.valid


def validate(g: Groupoid) -> ValidationReport:
    """Check every groupoid law exhaustively.

    Laws are reported in a fixed order, each with the first witness found:
    ``units``, ``composability``, ``source_range``, ``unit_law``,
    ``inverse_law``, ``associativity``.  Associativity is checked on every
    triple ``(a, b, c)`` with ``ab`` and ``bc`` defined and requires ``(ab)c``
    and ``a(bc)`` to be defined and equal.
    """
    rep = ValidationReport()
    src, rng, inv = g.source, g.range, g.inverse
    unit_set = g.unit_set

    def law(name, check):
        rep.checked.append(name)
        w = check()
        if w is not None:
            rep.violations.append(LawViolation(name, w[0], w[1]))

    def units():
        for x in g.units:
            if inv[x] != x or src[x] != x or rng[x] != x:
                return (x,), "unit not fixed by inverse/source/range"
        for a in range(g.n):
            if int(src[a]) not in unit_set or int(rng[a]) not in unit_set:
                return (a,), "source or range is not a unit"
        return None

    def composability():
        for a in range(g.n):
            for b in range(g.n):
                defined = g.mul(a, b) is not None
                if defined != (src[a] == rng[b]):
                    return (a, b), "product defined iff source(a) == range(b) fails"
        return None

    def source_range():
        for a, b, c in g.product_triples():
            if src[c] != src[b] or rng[c] != rng[a]:
                return (a, b, c), "source(ab) == source(b) and range(ab) == range(a) fails"
        return None

    def unit_law():
        for a in range(g.n):
            if g.mul(int(rng[a]), a) != a or g.mul(a, int(src[a])) != a:
                return (a,), "units do not act as identities"
        return None

    def inverse_law():
        for a in range(g.n):
            if g.mul(a, int(inv[a])) != rng[a] or g.mul(int(inv[a]), a) != src[a]:
                return (a, int(inv[a])), "a a^-1 == range(a) or a^-1 a == source(a) fails"
        return None

    def associativity():
        right = {}
        for a, b, c in g.product_triples():
            right.setdefault(a, []).append((b, c))
        for a, b, ab in g.product_triples():
            for c, bc in right.get(b, ()):
                lhs = g.mul(ab, c)
                rhs = g.mul(a, bc)
                if lhs is None or rhs is None or lhs != rhs:
                    return (a, b, c), f"(ab)c = {lhs} but a(bc) = {rhs}"
        return None

    law("units", units)
    law("composability", composability)
    law("source_range", source_range)
    law("unit_law", unit_law)
    law("inverse_law", inverse_law)
    law("associativity", associativity)
    return rep


# -- constructors ----------------------------------------------------------


def pair_id(n: int, i: int, j: int) -> int:
    """Id of the arrow ``(i, j)`` (range ``i``, source ``j``) in ``pair_groupoid(n)``."""
    return i * n + j


def pair_groupoid(n: int) -> Groupoid:
    """The full equivalence relation on ``n`` points.

    Arrow ``(i, j)`` has id ``i*n + j``, range ``i`` and source ``j``, and
    ``(i, j)(j, k) = (i, k)``.  A section of the trivial line bundle is then
    the ``n x n`` matrix with entry ``[i, j]`` at arrow ``(i, j)``, and
    convolution is matrix multiplication.
    """
    if n < 1:
        raise GroupoidError("pair groupoid needs n >= 1")
    ids = [(i, j) for i in range(n) for j in range(n)]
    units = [pair_id(n, i, i) for i in range(n)]
    source = [pair_id(n, j, j) for i, j in ids]
    range_ = [pair_id(n, i, i) for i, j in ids]
    inverse = [pair_id(n, j, i) for i, j in ids]
    product = [
        (pair_id(n, i, j), pair_id(n, j, k), pair_id(n, i, k))
        for i in range(n) for j in range(n) for k in range(n)
    ]
    return Groupoid(units, source, range_, inverse, product, labels=ids)


def _check_group_table(table: np.ndarray) -> int:
    n = table.shape[0]
    if table.ndim != 2 or table.shape != (n, n) or n < 1:
        raise InvalidGroupTable("Cayley table must be square and non-empty")
    if table.min() < 0 or table.max() >= n:
        raise InvalidGroupTable("Cayley table entries out of range")
    ident = [e for e in range(n) if np.array_equal(table[e], np.arange(n)) and np.array_equal(table[:, e], np.arange(n))]
    if not ident:
        raise InvalidGroupTable("no identity element")
    e = ident[0]
    for g in range(n):
        if not np.any(table[g] == e):
            raise InvalidGroupTable(f"element {g} has no inverse")
    # (gh)k == g(hk) for all triples
    lhs = table[table[:, :, None], np.arange(n)[None, None, :]]
    rhs = table[np.arange(n)[:, None, None], table[None, :, :]]
    if not np.array_equal(lhs, rhs):
        raise InvalidGroupTable("multiplication is not associative")
    return e


def from_group(cayley) -> Groupoid:
    """A finite group as a one-unit groupoid; arrow ids are the table indices."""
    table = np.asarray(cayley, dtype=np.int64)
    e = _check_group_table(table)
    n = table.shape[0]
    inverse = [int(np.flatnonzero(table[g] == e)[0]) for g in range(n)]
    product = [(g, h, int(table[g, h])) for g in range(n) for h in range(n)]
    return Groupoid([e], [e] * n, [e] * n, inverse, product)


def cyclic_group(n: int) -> Groupoid:
    """``Z/n`` with arrow ``k`` standing for the residue ``k``."""
    k = np.arange(n)
    return from_group((k[:, None] + k[None, :]) % n)


def disjoint_union(g1: Groupoid, g2: Groupoid) -> Groupoid:
    """Arrows of ``g1`` keep their ids; those of ``g2`` are shifted by ``g1.n``."""
    off = g1.n
    units = list(g1.units) + [u + off for u in g2.units]
    source = np.concatenate([g1.source, g2.source + off])
    range_ = np.concatenate([g1.range, g2.range + off])
    inverse = np.concatenate([g1.inverse, g2.inverse + off])
    product = g1.product_triples() + [(a + off, b + off, c + off) for a, b, c in g2.product_triples()]
    labels = None
    if g1.labels is not None or g2.labels is not None:
        labels = [(0, g1.label(a)) for a in range(g1.n)] + [(1, g2.label(a)) for a in range(g2.n)]
    return Groupoid(units, source, range_, inverse, product, labels=labels)


def direct_product(g1: Groupoid, g2: Groupoid) -> Groupoid:
    """Arrow ``(a1, a2)`` has id ``a1 * g2.n + a2``."""
    n2 = g2.n

    def ident(a1, a2):
        return a1 * n2 + a2

    units = [ident(u1, u2) for u1 in g1.units for u2 in g2.units]
    a1 = np.repeat(np.arange(g1.n), n2)
    a2 = np.tile(np.arange(n2), g1.n)
    source = g1.source[a1] * n2 + g2.source[a2]
    range_ = g1.range[a1] * n2 + g2.range[a2]
    inverse = g1.inverse[a1] * n2 + g2.inverse[a2]
    product = [
        (ident(p1, p2), ident(q1, q2), ident(r1, r2))
        for p1, q1, r1 in g1.product_triples()
        for p2, q2, r2 in g2.product_triples()
    ]
    labels = [(g1.label(int(x)), g2.label(int(y))) for x, y in zip(a1, a2)]
    return Groupoid(units, source, range_, inverse, product, labels=labels)


def action_groupoid(cayley, action) -> Groupoid:
    """Transformation groupoid of a group acting on ``{0, ..., m-1}``.

    ``action[g][x]`` is ``g . x``.  Arrow ``(g, x)`` has id ``g*m + x``,
    source ``x`` and range ``g . x``; the units are ``(e, x)``.
    """
    table = np.asarray(cayley, dtype=np.int64)
    try:
        e = _check_group_table(table)
    except InvalidGroupTable as exc:
        raise InvalidAction(f"acting group is invalid: {exc}") from exc
    act = np.asarray(action, dtype=np.int64)
    n = table.shape[0]
    if act.ndim != 2 or act.shape[0] != n or act.shape[1] < 1:
        raise InvalidAction("action must list one permutation per group element")
    m = act.shape[1]
    for g in range(n):
        if sorted(act[g]) != list(range(m)):
            raise InvalidAction(f"action of element {g} is not a permutation")
    if not np.array_equal(act[e], np.arange(m)):
        raise InvalidAction("identity does not act trivially")
    for g in range(n):
        for h in range(n):
            if not np.array_equal(act[table[g, h]], act[g][act[h]]):
                raise InvalidAction(f"action is not a homomorphism at ({g}, {h})")
    inv_el = [int(np.flatnonzero(table[g] == e)[0]) for g in range(n)]

    def ident(g, x):
        return g * m + x

    units = [ident(e, x) for x in range(m)]
    source, range_, inverse, labels = [], [], [], []
    for g in range(n):
        for x in range(m):
            gx = int(act[g, x])
            source.append(ident(e, x))
            range_.append(ident(e, gx))
            inverse.append(ident(inv_el[g], gx))
            labels.append((g, x))
    product = [
        (ident(h, int(act[g, x])), ident(g, x), ident(int(table[h, g]), x))
        for g in range(n) for x in range(m) for h in range(n)
    ]
    return Groupoid(units, source, range_, inverse, product, labels=labels)


# -- subsets ---------------------------------------------------------------


def is_slice(g: Groupoid, s: Iterable[int]) -> bool:
    """Source and range are both injective on ``s``."""
    s = list(s)
    return len({int(g.source[a]) for a in s}) == len(s) == len({int(g.range[a]) for a in s})


def set_product(g: Groupoid, k: Iterable[int], l: Iterable[int]) -> frozenset:
    """``{ab : a in k, b in l, ab defined}``."""
    by_range: dict[int, list[int]] = {}
    for b in l:
        by_range.setdefault(int(g.range[b]), []).append(int(b))
    out = set()
    for a in k:
        for b in by_range.get(int(g.source[a]), ()):
            out.add(g.mul(int(a), b))
    return frozenset(out)


def is_subgroupoid(g: Groupoid, s: Iterable[int]) -> bool:
    """Closed under inverses, defined products, and source/range units."""
    s = frozenset(int(a) for a in s)
    for a in s:
        if int(g.inverse[a]) not in s or int(g.source[a]) not in s or int(g.range[a]) not in s:
            return False
    return set_product(g, s, s) <= s


def generated_subgroupoid(g: Groupoid, s: Iterable[int]) -> frozenset:
    """Smallest subgroupoid containing ``s``, by worklist closure."""
    closed: set[int] = set()
    by_source: dict[int, set[int]] = {}
    by_range: dict[int, set[int]] = {}
    work = deque(int(a) for a in s)

    def push(a):
        if a not in closed:
            work.append(a)

    while work:
        a = work.popleft()
        if a in closed:
            continue
        closed.add(a)
        sa, ra = int(g.source[a]), int(g.range[a])
        by_source.setdefault(sa, set()).add(a)
        by_range.setdefault(ra, set()).add(a)
        push(int(g.inverse[a]))
        push(sa)
        push(ra)
        # products a*b with range(b) == source(a), and b*a with source(b) == range(a)
        for b in list(by_range.get(sa, ())):
            push(g.mul(a, b))
        for b in list(by_source.get(ra, ())):
            push(g.mul(b, a))
    return frozenset(closed)


def saturation_split(g: Groupoid, delta: Iterable[int], m: Iterable[int]) -> tuple[frozenset, frozenset]:
    """Split a subgroupoid into a part avoiding ``m`` and its saturation.

    Starting from ``M0 = m & delta`` iterate ``X = range[M] | source[M]`` and
    ``M' = delta & (source^-1[X] | range^-1[X])`` to a fixed point ``H``;
    then ``G = delta - H``.  Both are subgroupoids, ``G`` misses ``m``, and
    their unit sets are disjoint.

    Returns
    -------
    (G, H) : tuple of frozenset
    """
    delta = frozenset(int(a) for a in delta)
    if not is_subgroupoid(g, delta):
        raise NotASubgroupoid("delta is not closed under inverses, products and units")
    current = frozenset(int(a) for a in m) & delta
    hull = set(current)
    # each round either adds an arrow or stops, so |delta| + 1 rounds suffice
    for _ in range(len(delta) + 1):
        touched = {int(g.range[a]) for a in current} | {int(g.source[a]) for a in current}
        nxt = frozenset(a for a in delta if int(g.source[a]) in touched or int(g.range[a]) in touched)
        if nxt <= hull:
            break
        hull |= nxt
        current = nxt
    h = frozenset(hull)
    return delta - h, h


def induced_subgroupoid(g: Groupoid, arrows: Iterable[int]) -> tuple[Groupoid, tuple[int, ...]]:
    """Relabel a subgroupoid of ``g`` as a groupoid in its own right.

    Returns the new groupoid and ``ids`` with ``ids[i]`` the arrow of ``g``
    that the new arrow ``i`` stands for (sorted ascending).
    """
    ids = tuple(sorted(int(a) for a in arrows))
    if not ids:
        raise NotASubgroupoid("empty subgroupoid")
    if not is_subgroupoid(g, ids):
        raise NotASubgroupoid("arrow set is not a subgroupoid")
    new = {a: i for i, a in enumerate(ids)}
    units = [new[a] for a in ids if a in g.unit_set]
    source = [new[int(g.source[a])] for a in ids]
    range_ = [new[int(g.range[a])] for a in ids]
    inverse = [new[int(g.inverse[a])] for a in ids]
    product = [(new[a], new[b], new[c]) for a, b, c in g.product_triples() if a in new and b in new]
    labels = [g.label(a) for a in ids] if g.labels is not None else None
    return Groupoid(units, source, range_, inverse, product, labels=labels), ids
