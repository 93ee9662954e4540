import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fellgrid.algebra import random_section, random_slice_section
from fellgrid.bundle import BundleError, BundleMismatch, MatrixBundle, TwistedLineBundle
from fellgrid.generators import bilinear_cocycle, random_bundle
from fellgrid.groupoid import cyclic_group, direct_product, pair_groupoid, pair_id
from fellgrid.linalg import loewner_leq
from fellgrid.section import (
    Section,
    all_norms,
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
    rep_matrices,
    restrict,
    restrict_range,
    restrict_source,
    star,
)

from oracles import conv_loops, norm_b_brute, norms_brute, section_dict

SQRT2 = math.sqrt(2)
PHI = (1 + math.sqrt(5)) / 2


def line2(m):
    return Section.from_pair_matrix(TwistedLineBundle(pair_groupoid(2)), m)


# -- convolution ------------------------------------------------------------------


def test_convolution_golden():
    a = line2([[1, 1], [1, 0]])
    np.testing.assert_array_equal((a @ a).to_pair_matrix(), [[2, 1], [1, 1]])


def test_unit_laws_exact():
    rng = np.random.default_rng(0)
    for dims in ([1, 1], [2, 3]):
        b = MatrixBundle(pair_groupoid(2), dims)
        e = identity_section(b)
        a = random_section(b, rng)
        assert convolve(e, a).array_equal(a)
        assert convolve(a, e).array_equal(a)


def test_slice_left_factor_gives_single_terms():
    # a on a slice: every output arrow is a single product a(s) b(t)
    rng = np.random.default_rng(1)
    bundle = MatrixBundle(pair_groupoid(4), [1, 2, 1, 3])
    g = bundle.base
    for _ in range(20):
        a = random_slice_section(bundle, rng)
        b = random_section(bundle, rng)
        ab = convolve(a, b)
        for x in range(g.n):
            terms = [(s, t) for s in a.support for t in b.support if g.mul(s, t) == x]
            assert len(terms) <= 1
            if terms:
                s, t = terms[0]
                np.testing.assert_allclose(ab.value(x), a.value(s) @ b.value(t), atol=1e-12)


def test_convolution_matches_loops():
    rng = np.random.default_rng(2)
    for _ in range(25):
        bundle = random_bundle(rng, max_dim=3, max_arrows=30)
        a, b = random_section(bundle, rng), random_section(bundle, rng)
        ref = conv_loops(bundle, section_dict(a), section_dict(b))
        got = convolve(a, b)
        for x, v in ref.items():
            np.testing.assert_allclose(got.value(x), v, atol=1e-10 * (1 + np.abs(v).max()))


def test_mismatched_bundles_rejected():
    a = Section.zeros(MatrixBundle(pair_groupoid(2), [1, 1]))
    b = Section.zeros(MatrixBundle(pair_groupoid(2), [1, 2]))
    with pytest.raises(BundleMismatch):
        convolve(a, b)
    with pytest.raises(BundleMismatch):
        inner_product(a, b)


def test_padding_must_stay_zero():
    b = MatrixBundle(pair_groupoid(2), [1, 2])
    v = np.zeros((4, 2, 2), dtype=complex)
    v[0, 1, 1] = 1.0  # unit 0 has a 1x1 fibre
    with pytest.raises(BundleError):
        Section(b, v)


# -- star, restriction, diagonal, inner product ----------------------------------------


@pytest.mark.parametrize("twisted", [False, True])
def test_star_involution(twisted):
    rng = np.random.default_rng(3)
    if twisted:
        bundle = TwistedLineBundle(direct_product(cyclic_group(2), cyclic_group(2)), bilinear_cocycle(2, 2))
    else:
        bundle = MatrixBundle(pair_groupoid(3), [2, 1, 3])
    a = random_section(bundle, rng)
    if twisted:
        assert star(star(a)).max_abs_diff(a) <= 1e-15 * norm_inf(a)
    else:
        assert star(star(a)).array_equal(a)


def test_restrict_and_diagonal():
    rng = np.random.default_rng(4)
    b = MatrixBundle(pair_groupoid(3), [1, 2, 2])
    a = random_section(b, rng, density=1.0)
    assert restrict(a, range(b.base.n)).array_equal(a)
    d = diagonal(a)
    assert d.support <= b.base.unit_set
    assert diagonal(d).array_equal(d)
    assert restrict(a, []).array_equal(Section.zeros(b))


def test_inner_product_properties():
    rng = np.random.default_rng(5)
    bundle = MatrixBundle(pair_groupoid(3), [1, 2, 3])
    e = identity_section(bundle)
    for _ in range(20):
        a, b = random_section(bundle, rng), random_section(bundle, rng)
        aa = inner_product(a, a)
        for x in bundle.base.units:
            assert loewner_leq(np.zeros_like(aa.value(x)), aa.value(x))
        assert inner_product(e, b).allclose(diagonal(b))
        dsec = diagonal(random_section(bundle, rng, density=1.0))
        lhs = inner_product(a, convolve(b, dsec))
        rhs = convolve(inner_product(a, b), dsec)
        assert lhs.allclose(rhs)


# -- the five norms -----------------------------------------------------------------------


def test_norms_golden_2x2():
    a = line2([[1, 1], [1, 0]])
    got = all_norms(a)
    assert got["inf"] == pytest.approx(1.0, abs=1e-12)
    assert got["1"] == pytest.approx(2.0, abs=1e-12)
    assert got["2"] == pytest.approx(SQRT2, abs=1e-12)
    assert got["i"] == pytest.approx(2.0, abs=1e-12)
    assert abs(got["b"] - PHI) <= 1e-9


def test_norm_b_golden_sign_matrix():
    assert abs(norm_b(line2([[1, 1], [1, -1]])) - SQRT2) <= 1e-9


def test_zero_section_norms():
    b = MatrixBundle(pair_groupoid(2), [2, 1])
    assert all(v == 0.0 for v in all_norms(Section.zeros(b)).values())


def test_single_unit_value():
    z = 0.6 - 0.8j * 3
    a = Section.from_values(TwistedLineBundle(pair_groupoid(3)), {pair_id(3, 1, 1): [[z]]})
    for v in all_norms(a).values():
        assert v == pytest.approx(abs(z), abs=1e-12)


def test_pair_line_bundle_b_is_matrix_norm():
    rng = np.random.default_rng(6)
    for k in (1, 2, 3, 5, 8):
        m = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        a = Section.from_pair_matrix(TwistedLineBundle(pair_groupoid(k)), m)
        assert abs(norm_b(a) - np.linalg.norm(m, 2)) <= 1e-9 * (1 + np.linalg.norm(m, 2))


# Values frozen from tests/oracles.py (full left-multiplication matrix, plain loops).
FROZEN = [
    (
        lambda: MatrixBundle(pair_groupoid(2), [1, 2]),
        {0: [[1]], 1: [[1, 2]], 2: [[0], [1]], 3: [[1, 0], [0, -1]]},
        {"inf": 2.23606797749979, "1": 3.23606797749979, "2": 2.449489742783178, "i": 3.23606797749979, "b": 2.5320888862379562},
    ),
    (
        lambda: TwistedLineBundle(direct_product(cyclic_group(2), cyclic_group(2)), bilinear_cocycle(2, 2)),
        {0: [[1]], 1: [[1]], 2: [[1]], 3: [[1]]},
        {"inf": 1.0, "1": 4.0, "2": 2.0, "i": 4.0, "b": 2 * SQRT2},
    ),
    (
        lambda: TwistedLineBundle(direct_product(cyclic_group(2), cyclic_group(2)), bilinear_cocycle(2, 2)),
        {0: [[1]], 1: [[1j]], 2: [[2]]},
        {"inf": 2.0, "1": 4.0, "2": math.sqrt(6), "i": 4.0, "b": 2 + SQRT2},
    ),
]


@pytest.mark.parametrize("make, values, expect", FROZEN, ids=["matrix-12", "klein-ones", "klein-mixed"])
def test_frozen_norm_values(make, values, expect):
    got = all_norms(Section.from_values(make(), values))
    for k, v in expect.items():
        assert abs(got[k] - v) <= 1e-9, k


def test_norms_match_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(30):
        bundle = random_bundle(rng, max_dim=3, max_arrows=24)
        a = random_section(bundle, rng)
        ref = norms_brute(bundle, section_dict(a))
        got = all_norms(a)
        for k in ref:
            assert abs(got[k] - ref[k]) <= 1e-9 + 1e-9 * ref[k], (k, bundle)


def test_rep_blocks_are_square_and_sized():
    bundle = MatrixBundle(pair_groupoid(3), [1, 2, 3])
    a = random_section(bundle, np.random.default_rng(8))
    reps = rep_matrices(a)
    assert set(reps) == set(bundle.base.units)
    for rep in reps.values():
        assert rep.shape == (6, 6)  # sum of range dims over the source fibre


def test_backends_agree():
    rng = np.random.default_rng(9)
    for _ in range(10):
        bundle = random_bundle(rng, max_dim=4, max_arrows=40)
        a = random_section(bundle, rng)
        assert abs(norm_b(a) - norm_b(a, backend="lapack")) <= 1e-9 * (1 + norm_b(a))


# -- restrictions and b ----------------------------------------------------------------------


def test_unit_restriction_never_increases_b():
    rng = np.random.default_rng(10)
    for _ in range(30):
        bundle = random_bundle(rng, max_dim=3)
        a = random_section(bundle, rng)
        units = [u for u in bundle.base.units if rng.random() < 0.5]
        nb = norm_b(a)
        assert norm_b(restrict_source(a, units)) <= nb * (1 + 1e-9) + 1e-9
        assert norm_b(restrict_range(a, units)) <= nb * (1 + 1e-9) + 1e-9


def test_non_unit_restriction_can_increase_b():
    a = line2([[1, 1], [1, -1]])
    r = restrict(a, [pair_id(2, 0, 0), pair_id(2, 0, 1), pair_id(2, 1, 0)])
    np.testing.assert_array_equal(r.to_pair_matrix(), [[1, 1], [1, 0]])
    assert abs(norm_b(a) - SQRT2) <= 1e-9
    assert abs(norm_b(r) - PHI) <= 1e-9


# -- the oracle ------------------------------------------------------------------------------


def test_oracle_identity():
    e = identity_section(MatrixBundle(pair_groupoid(3), [1, 2, 1]))
    assert abs(norm_b_oracle(e) - 1.0) <= 1e-9


def test_oracle_golden_matrices():
    for m, v in (([[1, 1], [1, -1]], SQRT2), ([[1, 1], [1, 0]], PHI)):
        assert abs(norm_b_oracle(line2(m)) - v) <= 1e-3 * v


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_is_lower_bound(seed):
    rng = np.random.default_rng(seed)
    bundle = random_bundle(rng, max_dim=3, max_arrows=40)
    a = random_section(bundle, rng)
    nb = norm_b(a)
    assert norm_b_oracle(a, trials=3, iterations=30, seed=seed) <= nb + 1e-8 * (1 + nb)


def test_norm_b_brute_on_small_matrix_bundle():
    bundle = MatrixBundle(pair_groupoid(2), [2, 1])
    a = random_section(bundle, np.random.default_rng(11), density=1.0)
    assert abs(norm_b(a) - norm_b_brute(bundle, section_dict(a))) <= 1e-9 * (1 + norm_b(a))


def test_norm_chain_quick():
    rng = np.random.default_rng(12)
    for _ in range(50):
        bundle = random_bundle(rng)
        a = random_section(bundle, rng)
        n = all_norms(a)
        slack = 1e-9 + 1e-7 * n["i"]
        assert n["inf"] <= n["2"] + slack
        assert n["2"] <= n["b"] + slack
        assert n["b"] <= n["i"] + slack
        assert n["2"] <= n["1"] + slack
        assert norm_i(a) == max(norm_1(a), norm_1(star(a)))
        assert norm_inf(a) <= norm_2(a) + slack
