"""
Essential seminorm on a groupoid with two components.

A section supported on two copies of pair(2) is quotiented by the sections
living on a declared negligible set.  Since one arrow of the first copy is
negligible, saturation swallows the whole first copy, and what remains is the
b-norm of the second copy.
"""
import numpy as np

from fellgrid import TwistedLineBundle, disjoint_union, pair_groupoid
from fellgrid.algebra import NegligibleSet, essential_seminorm, quotient_bound_check
from fellgrid.groupoid import generated_subgroupoid, pair_id, saturation_split
from fellgrid.section import Section, norm_b, restrict

g = disjoint_union(pair_groupoid(2), pair_groupoid(2))
bundle = TwistedLineBundle(g)

# first copy: arrows 0..3, second copy: arrows 4..7
a = Section.from_values(bundle, {0: [[3]], 1: [[2]], 2: [[-1]], 4: [[1]], 5: [[1]], 6: [[1]]})
n = NegligibleSet({pair_id(2, 0, 1)})

delta = generated_subgroupoid(g, a.support)
G, H = saturation_split(g, delta, n.null_arrows & delta)
print("generated subgroupoid:", sorted(delta))
print("kept G:", sorted(G), " saturated H:", sorted(H))

value, _, _ = essential_seminorm(a, n)
print(f"norm_b(a)            = {norm_b(a):.6f}")
print(f"essential seminorm   = {value:.6f}")
print(f"golden ratio         = {(1 + np.sqrt(5)) / 2:.6f}")

# %% the quotient infimum, sampled
# Subtracting anything supported in H never beats the essential value,
# and subtracting a_H attains it.
rep = quotient_bound_check(a, n, samples=200, seed=1)
print(rep.summary())
print("norm_b(a - a_H) =", norm_b(a - restrict(a, H)))
