import numpy as np
import pytest

from fellgrid.algebra import (
    NegligibleSet,
    cstar_suite,
    diagonal_unit,
    essential_seminorm,
    multiplier_norm_check,
    quotient_bound_check,
    random_section,
    sign_flip_convolution,
    singular_membership,
)
from fellgrid.bundle import MatrixBundle, TwistedLineBundle
from fellgrid.generators import coboundary_cocycle, disjoint_union_instance, random_bundle, random_phases
from fellgrid.groupoid import cyclic_group, disjoint_union, generated_subgroupoid, pair_groupoid, pair_id, saturation_split
from fellgrid.section import Section, convolve, norm_b, restrict


def test_suite_matrix_pair3():
    rep = cstar_suite(MatrixBundle(pair_groupoid(3), [1, 2, 2]), trials=300, seed=0)
    assert rep.passed, rep.summary()
    assert rep["associativity"].trials == 300


def test_suite_twisted_z4():
    rng = np.random.default_rng(1)
    g = cyclic_group(4)
    b = TwistedLineBundle(g, coboundary_cocycle(g, random_phases(g.n, rng)))
    rep = cstar_suite(b, trials=100, seed=1)
    assert rep.passed, rep.summary()


def test_suite_random_bundles():
    rng = np.random.default_rng(2)
    for _ in range(6):
        b = random_bundle(rng)
        rep = cstar_suite(b, trials=30, seed=int(rng.integers(2**32)))
        assert rep.passed, rep.summary()


def test_sign_flip_is_caught():
    b = MatrixBundle(pair_groupoid(3), [1, 2, 2])
    rep = cstar_suite(b, trials=50, seed=3, conv=sign_flip_convolution(b))
    assert not rep.passed
    assoc = rep["associativity"]
    assert not assoc.passed
    assert assoc.witness is not None


# -- unit and multipliers ---------------------------------------------------------------


def test_diagonal_unit():
    b = TwistedLineBundle(pair_groupoid(2))
    e = diagonal_unit(b)
    np.testing.assert_array_equal(e.to_pair_matrix(), np.eye(2))
    a = random_section(b, np.random.default_rng(4))
    assert convolve(e, a).array_equal(a)
    assert norm_b(e) == pytest.approx(1.0, abs=1e-12)
    assert norm_b(diagonal_unit(MatrixBundle(pair_groupoid(3), [3, 1, 2]))) == pytest.approx(1.0, abs=1e-12)


def test_multiplier_identity():
    b = MatrixBundle(pair_groupoid(2), [2, 1])
    rep = multiplier_norm_check(b, diagonal_unit(b), trials=20)
    assert rep.passed
    assert rep["multiplier_attained"].max_violation == 0.0


def test_multiplier_random():
    rng = np.random.default_rng(5)
    for _ in range(10):
        b = random_bundle(rng, max_arrows=30)
        rep = multiplier_norm_check(b, random_section(b, rng), trials=20, seed=int(rng.integers(100)))
        assert rep.passed, rep.summary()


# -- essential seminorm -------------------------------------------------------------------


def test_essential_nothing_negligible():
    rng = np.random.default_rng(6)
    b = MatrixBundle(pair_groupoid(3), [1, 2, 1])
    a = random_section(b, rng)
    value, G, H = essential_seminorm(a, NegligibleSet())
    assert value == norm_b(a)
    assert H == frozenset()


def test_essential_everything_negligible():
    rng = np.random.default_rng(7)
    b = MatrixBundle(pair_groupoid(3), [1, 2, 1])
    a = random_section(b, rng)
    value, G, H = essential_seminorm(a, NegligibleSet(range(b.base.n)))
    assert value == 0.0
    assert G == frozenset()


def test_essential_hand_example():
    # two copies of pair(2); first copy meets the negligible set, so only the second survives
    b = TwistedLineBundle(disjoint_union(pair_groupoid(2), pair_groupoid(2)))
    vals = {0: 1, 1: 2, 2: -1, 3: 1, 4: 1, 5: 1, 6: 1, 7: 0}
    a = Section.from_values(b, {k: [[v]] for k, v in vals.items()})
    value, G, H = essential_seminorm(a, NegligibleSet({pair_id(2, 0, 1)}))
    assert H == frozenset(range(4)) and G == frozenset(range(4, 8))
    golden = (1 + 5**0.5) / 2  # second copy carries [[1,1],[1,0]]
    assert abs(value - golden) <= 1e-9
    assert abs(value - norm_b(restrict(a, range(4, 8)))) <= 1e-12


def test_singular_membership():
    b = TwistedLineBundle(pair_groupoid(2))
    n = NegligibleSet({1, 2})
    assert singular_membership(Section.zeros(b), n)
    assert singular_membership(Section.from_values(b, {1: [[1]], 2: [[3]]}), n)
    assert not singular_membership(Section.from_values(b, {1: [[1]], 0: [[3]]}), n)


def test_quotient_bound_random_instances():
    rng = np.random.default_rng(8)
    for _ in range(20):
        bundle, first, second = disjoint_union_instance(rng)
        a = random_section(bundle, rng, density=1.0)
        n = NegligibleSet({int(rng.choice(sorted(first)))})
        rep = quotient_bound_check(a, n, samples=30, seed=int(rng.integers(100)))
        assert rep.passed, rep.summary()


def test_triangle_fails_with_separate_splits():
    # each of a, b has essential seminorm 0 but a + b is the unit
    bundle = TwistedLineBundle(pair_groupoid(2))
    n = NegligibleSet({pair_id(2, 0, 1)})
    a = Section.from_pair_matrix(bundle, [[1, 1], [0, 0]])
    b = Section.from_pair_matrix(bundle, [[0, -1], [0, 1]])
    assert essential_seminorm(a, n).value == 0.0
    assert essential_seminorm(b, n).value == 0.0
    assert essential_seminorm(a + b, n).value == pytest.approx(1.0)


def test_seminorm_laws_on_shared_split():
    rng = np.random.default_rng(9)
    for _ in range(30):
        bundle, first, second = disjoint_union_instance(rng)
        g = bundle.base
        a, b = random_section(bundle, rng), random_section(bundle, rng)
        delta = generated_subgroupoid(g, a.support | b.support)
        n = {int(rng.choice(sorted(first)))}
        G, _ = saturation_split(g, delta, n & delta)

        def ess(x):
            return norm_b(restrict(x, G))

        z = complex(rng.standard_normal(), rng.standard_normal())
        slack = 1e-9 + 1e-7 * (ess(a) + ess(b)) * (1 + abs(z))
        assert ess(a + b) <= ess(a) + ess(b) + slack
        assert abs(ess(z * a) - abs(z) * ess(a)) <= slack
        assert ess(convolve(a, b)) <= ess(a) * ess(b) + slack * (1 + ess(a) * ess(b))
