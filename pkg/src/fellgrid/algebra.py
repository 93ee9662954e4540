"""
C*-structure checks on section algebras and the essential seminorm.

Negligible arrows
-----------------
In a finite discrete groupoid there are no nonempty meagre sets, so the
essential quotient is trivial.  To exercise the construction we instead take
an explicit set of *negligible* arrows ``N``.  A section is singular when its
support lies inside ``N``.  The essential seminorm of ``a`` is computed by
splitting the subgroupoid ``D`` generated by ``supp(a)`` into ``G`` (which
avoids ``N``) and the saturation ``H`` of ``N & D``, and taking
``norm_b(a restricted to G)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .bundle import FellBundle
from .groupoid import generated_subgroupoid, saturation_split
from .linalg import DEFAULT_TOL, NotPositive, Tolerance, loewner_leq, operator_norm, psd_power
from .report import Report
from .section import (
    Section,
    convolve,
    diagonal,
    identity_section,
    inner_product,
    norm_1,
    norm_2,
    norm_b,
    norm_b_oracle,
    norm_i,
    norm_inf,
    restrict,
    restrict_range,
    restrict_source,
    star,
    two_sided_ratio,
)

__all__ = [
    "NegligibleSet",
    "EssentialNorm",
    "diagonal_unit",
    "random_section",
    "random_slice",
    "random_slice_section",
    "cstar_suite",
    "multiplier_norm_check",
    "essential_seminorm",
    "singular_membership",
    "quotient_bound_check",
    "sign_flip_convolution",
]

Convolution = Callable[[Section, Section], Section]


@dataclass(frozen=True)
class NegligibleSet:
    """Arrows declared negligible; no closure properties are assumed."""

    null_arrows: frozenset

    def __init__(self, null_arrows: Iterable[int] = ()):
        object.__setattr__(self, "null_arrows", frozenset(int(a) for a in null_arrows))


class EssentialNorm(NamedTuple):
    value: float
    G: frozenset
    H: frozenset


def diagonal_unit(bundle: FellBundle) -> Section:
    """The unit of the section algebra: identity on every unit fibre."""
    return identity_section(bundle)


# -- random instances ----------------------------------------------------------


def random_section(
    bundle: FellBundle,
    rng: np.random.Generator,
    support: Iterable[int] | None = None,
    density: float | None = None,
    scale: float | None = None,
) -> Section:
    """Random complex Gaussian section.

    Arrows are kept independently with probability ``density`` (drawn
    uniformly from [0.2, 1] when omitted), restricted to ``support`` if
    given.  The whole section is multiplied by ``scale`` (log-uniform on
    [0.1, 10] when omitted).
    """
    n, d = bundle.base.n, bundle.dmax
    if density is None:
        density = rng.uniform(0.2, 1.0)
    if scale is None:
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
    keep = rng.random(n) < density
    if support is not None:
        allowed = np.zeros(n, dtype=bool)
        allowed[list(support)] = True
        keep &= allowed
    v = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    v *= bundle.mask * keep[:, None, None] * (scale / np.sqrt(2.0))
    return Section(bundle, v)


def random_slice(g, rng: np.random.Generator, size: int | None = None) -> frozenset:
    """A random slice: arrows added in random order while source and range stay injective."""
    order = rng.permutation(g.n)
    if size is None:
        size = int(rng.integers(1, len(g.units) + 1))
    used_s, used_r, out = set(), set(), []
    for a in order.tolist():
        s, r = int(g.source[a]), int(g.range[a])
        if s in used_s or r in used_r:
            continue
        used_s.add(s)
        used_r.add(r)
        out.append(a)
        if len(out) >= size:
            break
    return frozenset(out)


def random_slice_section(bundle: FellBundle, rng: np.random.Generator) -> Section:
    return random_section(bundle, rng, support=random_slice(bundle.base, rng), density=1.0)


def sign_flip_convolution(bundle: FellBundle) -> Convolution:
    """A deliberately broken convolution that negates the output on the first non-unit arrow.

    Negating every output would still be associative up to sign bookkeeping,
    so only one arrow is touched.
    """
    non_units = [a for a in range(bundle.base.n) if a not in bundle.base.unit_set]
    target = non_units[0] if non_units else 0

    def bad(a: Section, b: Section) -> Section:
        v = convolve(a, b).values.copy()
        v[target] *= -1
        return Section(a.bundle, v)

    return bad


# -- C*-suite ------------------------------------------------------------------


def _sec_excess(x: Section, y: Section, scale: float, tol: Tolerance) -> float:
    return max(0.0, x.max_abs_diff(y) - tol.bound(scale))


def cstar_suite(
    bundle: FellBundle,
    trials: int = 100,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
    conv: Convolution = convolve,
    oracle_every: int = 10,
) -> Report:
    """Randomized check of every norm inequality and algebraic law.

    Each trial draws fresh random sections (dense, sparse and slice-supported)
    and records one sample per law.  ``conv`` replaces the convolution
    everywhere, which is how a corrupted product can be shown to fail.
    ``norm_b_oracle`` (the expensive power-iteration lower bound) runs on every
    ``oracle_every``-th trial.
    """
    rep = Report("section algebra laws")
    rng = np.random.default_rng(seed)
    g = bundle.base
    units = list(g.units)
    C = {
        "chain_inf_2": rep.check("chain_inf_2", "norm_inf <= norm_2"),
        "chain_2_b": rep.check("chain_2_b", "norm_2 <= norm_b"),
        "chain_b_i": rep.check("chain_b_i", "norm_b <= norm_i"),
        "chain_2_1": rep.check("chain_2_1", "norm_2 <= norm_1"),
        "slice_collapse": rep.check("slice_collapse", "slice support: norm_inf = norm_1 = norm_2 = norm_b"),
        "holder": rep.check("holder", "norm_inf(a* b) <= norm_2(a) norm_2(b)"),
        "mixed_right_slice": rep.check("mixed_right_slice", "supp(s) slice: norm_2(a s) <= norm_2(a) norm_inf(s)"),
        "mixed_left_slice": rep.check("mixed_left_slice", "supp(s) slice: norm_2(s a) <= norm_inf(s) norm_2(a)"),
        "cauchy_schwarz": rep.check("cauchy_schwarz", "|fg(x)| <= |ff*(r x)|^1/2 |g*g(s x)|^1/2"),
        "two_norm_identity": rep.check("two_norm_identity", "norm_2(a)^2 = norm_inf(diagonal(a* a))"),
        "b_star": rep.check("b_star", "norm_b(a*) = norm_b(a)"),
        "b_submultiplicative": rep.check("b_submultiplicative", "norm_b(ab) <= norm_b(a) norm_b(b)"),
        "b_cstar_identity": rep.check("b_cstar_identity", "norm_b(a* a) = norm_b(a)^2"),
        "two_sided": rep.check("two_sided", "norm_inf(g* a f) <= norm_b(a) norm_2(g) norm_2(f)"),
        "restrict_source": rep.check("restrict_source", "source-unit restriction does not increase norm_b"),
        "restrict_range": rep.check("restrict_range", "range-unit restriction does not increase norm_b"),
        "star_square": rep.check("star_square", "bb* <= cc* on units (slices) => norm_b(ab) <= norm_b(ac)"),
        "adjointable": rep.check("adjointable", "<ab, c> = <b, a* c>"),
        "inner_positive": rep.check("inner_positive", "<a, a> >= 0 on every unit"),
        "inner_right_linear": rep.check("inner_right_linear", "<a, b d> = <a, b> d for diagonal d"),
        "associativity": rep.check("associativity", "(ab)c = a(bc)"),
        "distributivity": rep.check("distributivity", "a(b + c) = ab + ac and (a + b)c = ac + bc"),
        "star_antihomomorphism": rep.check("star_antihomomorphism", "(ab)* = b* a*"),
        "star_involution": rep.check("star_involution", "a** = a"),
        "oracle_below_b": rep.check("oracle_below_b", "sampled |af|_2 / |f|_2 <= norm_b(a)"),
    }
    for t in range(trials):
        w = {"trial": t}
        a = random_section(bundle, rng)
        b = random_section(bundle, rng)
        c = random_section(bundle, rng)
        f = random_section(bundle, rng)
        h = random_section(bundle, rng)
        s = random_slice_section(bundle, rng)

        ninf, n1, n2, nb, ni = norm_inf(a), norm_1(a), norm_2(a), norm_b(a), norm_i(a)
        C["chain_inf_2"].record_leq(ninf, n2, w, tol)
        C["chain_2_b"].record_leq(n2, nb, w, tol)
        C["chain_b_i"].record_leq(nb, ni, w, tol)
        C["chain_2_1"].record_leq(n2, n1, w, tol)

        vals = [norm_inf(s), norm_1(s), norm_2(s), norm_b(s)]
        C["slice_collapse"].record(max(0.0, max(vals) - min(vals) - tol.bound(max(vals))), w)

        C["holder"].record_leq(norm_inf(conv(star(a), b)), n2 * norm_2(b), w, tol)
        C["mixed_right_slice"].record_leq(norm_2(conv(a, s)), n2 * norm_inf(s), w, tol)
        C["mixed_left_slice"].record_leq(norm_2(conv(s, a)), norm_inf(s) * n2, w, tol)

        fg = conv(f, h)
        ff = conv(f, star(f))
        gg = conv(star(h), h)
        worst = 0.0
        for x in range(g.n):
            lhs = operator_norm(fg.value(x))
            rhs = np.sqrt(operator_norm(ff.value(int(g.range[x]))) * operator_norm(gg.value(int(g.source[x]))))
            worst = max(worst, tol.excess(lhs, rhs))
        C["cauchy_schwarz"].record(worst, w)

        ata = conv(star(a), a)
        C["two_norm_identity"].record_close(n2 * n2, norm_inf(diagonal(ata)), w, tol)
        C["b_star"].record_close(norm_b(star(a)), nb, w, tol)
        nbb = norm_b(b)
        C["b_submultiplicative"].record_leq(norm_b(conv(a, b)), nb * nbb, w, tol)
        C["b_cstar_identity"].record_close(norm_b(ata), nb * nb, w, tol)
        C["two_sided"].record_leq(two_sided_ratio(a, f, h), nb, w, tol)

        subset = [x for x in units if rng.random() < 0.5]
        C["restrict_source"].record_leq(norm_b(restrict_source(a, subset)), nb, w, tol)
        C["restrict_range"].record_leq(norm_b(restrict_range(a, subset)), nb, w, tol)

        # b = c' d with d a slice-supported contraction gives bb* <= c'c* on units
        cs = random_slice_section(bundle, rng)
        d = random_slice_section(bundle, rng)
        d = d / max(1.0, norm_inf(d))
        bs = conv(cs, d)
        bbs = conv(bs, star(bs))
        ccs = conv(cs, star(cs))
        order_ok = True
        for x in units:
            p, q = bbs.value(x), ccs.value(x)
            if not loewner_leq(0.5 * (p + p.conj().T), 0.5 * (q + q.conj().T)):
                order_ok = False
        if order_ok:
            C["star_square"].record_leq(norm_b(conv(a, bs)), norm_b(conv(a, cs)), w, tol)
        else:
            C["star_square"].record(1.0, dict(w, detail="constructed pair failed the unit order"))

        scale3 = ni * norm_i(b) * norm_i(c)
        C["adjointable"].record(
            _sec_excess(inner_product(conv(a, b), c), inner_product(b, conv(star(a), c)), scale3, tol), w
        )
        aa = inner_product(a, a)
        pos_ok = True
        for x in units:
            v = aa.value(x)
            try:
                psd_power(0.5 * (v + v.conj().T), 1.0)
            except NotPositive:
                pos_ok = False
        C["inner_positive"].record_bool(pos_ok, w)
        dd = diagonal(c)
        C["inner_right_linear"].record(
            _sec_excess(inner_product(a, conv(b, dd)), conv(inner_product(a, b), dd), scale3, tol), w
        )

        C["associativity"].record(_sec_excess(conv(conv(a, b), c), conv(a, conv(b, c)), scale3, tol), w)
        dist = max(
            _sec_excess(conv(a, b + c), conv(a, b) + conv(a, c), scale3, tol),
            _sec_excess(conv(a + b, c), conv(a, c) + conv(b, c), scale3, tol),
        )
        C["distributivity"].record(dist, w)
        C["star_antihomomorphism"].record(
            _sec_excess(star(conv(a, b)), conv(star(b), star(a)), ni * norm_i(b), tol), w
        )
        C["star_involution"].record(_sec_excess(star(star(a)), a, ni, tol), w)

        if oracle_every and t % oracle_every == 0:
            C["oracle_below_b"].record_leq(norm_b_oracle(a, trials=2, seed=seed + t, iterations=30), nb, w, tol)
    return rep


def multiplier_norm_check(
    bundle: FellBundle, l: Section, trials: int = 50, seed: int = 0, tol: Tolerance = DEFAULT_TOL
) -> Report:
    """Compare ``sup norm_b(l a)`` over ``norm_b(a) <= 1`` with ``norm_b(l)``.

    The samples are ``e`` (which attains the sup) and ``trials`` random
    sections scaled into the unit ball.
    """
    rep = Report("multiplier norm")
    rng = np.random.default_rng(seed)
    below = rep.check("multiplier_below", "norm_b(l a) <= norm_b(l) for norm_b(a) <= 1")
    attained = rep.check("multiplier_attained", "sup over the unit ball equals norm_b(l)")
    nl = norm_b(l)
    e = diagonal_unit(bundle)
    best = norm_b(convolve(l, e))
    below.record_leq(best, nl, {"sample": "unit"}, tol)
    for t in range(trials):
        a = random_section(bundle, rng)
        na = norm_b(a)
        if na == 0.0:
            continue
        a = a / na
        v = norm_b(convolve(l, a))
        below.record_leq(v, nl, {"trial": t}, tol)
        best = max(best, v)
    attained.record(max(0.0, abs(best - nl) - 1e-6 * max(1.0, nl)), {"sup": best, "norm_b": nl})
    return rep


# -- essential seminorm ----------------------------------------------------------


def essential_seminorm(a: Section, n: NegligibleSet) -> EssentialNorm:
    """Essential seminorm with the split used to compute it.

    ``D`` is the subgroupoid generated by ``supp(a)``, ``(G, H)`` the
    saturation split of ``D`` along ``N & D``, and the value is
    ``norm_b(restrict(a, G))``.
    """
    g = a.bundle.base
    delta = generated_subgroupoid(g, a.support)
    G, H = saturation_split(g, delta, n.null_arrows & delta)
    return EssentialNorm(norm_b(restrict(a, G)), G, H)


def singular_membership(a: Section, n: NegligibleSet) -> bool:
    """Whether ``supp(a)`` lies inside the negligible arrows."""
    return a.support <= n.null_arrows


def quotient_bound_check(
    a: Section, n: NegligibleSet, samples: int = 100, seed: int = 0, tol: Tolerance = DEFAULT_TOL
) -> Report:
    """Check the essential seminorm against the quotient infimum.

    Samples singular ``b`` supported inside the saturation ``H`` and checks
    ``value <= norm_b(a - b)``; also checks that ``b = restrict(a, H)``
    attains equality and that restricting to ``G`` agrees with restricting
    by the source units of ``G``.
    """
    rep = Report("essential seminorm")
    rng = np.random.default_rng(seed)
    value, G, H = essential_seminorm(a, n)
    g = a.bundle.base
    consistent = rep.check("split_restriction", "a_G equals a restricted to arrows with source in s[G]")
    gunits = {int(g.source[x]) for x in G}
    consistent.record(restrict(a, G).max_abs_diff(restrict_source(a, gunits)))
    singular = rep.check("samples_singular", "sampled b are singular for the saturation H")
    bound = rep.check("quotient_bound", "value <= norm_b(a - b) for b supported in H")
    witness = rep.check("quotient_witness", "b = a_H attains value = norm_b(a - b)")
    h_list = sorted(H)
    held = NegligibleSet(H)
    for t in range(samples):
        if h_list:
            b = random_section(a.bundle, rng, support=h_list)
        else:
            b = Section.zeros(a.bundle)
        singular.record_bool(singular_membership(b, held), {"trial": t})
        bound.record_leq(value, norm_b(a - b), {"trial": t}, tol)
    witness.record_close(value, norm_b(a - restrict(a, H)), {"value": value}, tol)
    return rep
