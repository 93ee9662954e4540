"""
Fell morphisms and the functor to section algebras.

A morphism ``rho -> rho2`` consists of a star-bijective functor from a
subgroupoid of the target base back to the source base, together with a
fibrewise map ``v -> L v R``.  Applying it to sections is a contractive
*-homomorphism, and composing morphisms matches composing the section maps.
"""
import numpy as np

from fellgrid import MatrixBundle, pair_groupoid
from fellgrid.generators import random_morphism
from fellgrid.morphism import algebraize, compose_fell, validate_morphism
from fellgrid.algebra import random_section
from fellgrid.section import convolve, norm_b

rng = np.random.default_rng(7)
src = MatrixBundle(pair_groupoid(2), [1, 2])

fold = random_morphism(src, rng, kind="fold")
print("fold target base:", fold.target.base.n, "arrows; dims", fold.target.dims)
print(validate_morphism(fold, trials=50).summary())

twist = random_morphism(fold.target, rng, kind="twist")
both = compose_fell(twist, fold)

f, g, gf = algebraize(fold), algebraize(twist), algebraize(both)
a, b = random_section(src, rng), random_section(src, rng)

# %% homomorphism, contractivity, functoriality
print("f(ab) - f(a)f(b):", f(convolve(a, b)).max_abs_diff(convolve(f(a), f(b))))
print("norm_b a, f(a):  ", norm_b(a), norm_b(f(a)))
print("(g o f)(a) - g(f(a)):", gf(a).max_abs_diff(g(f(a))))
