"""
The smallest interesting case: the trivial line bundle over the pair groupoid
on two points.  Sections are just 2x2 complex matrices, convolution is the
matrix product and the b-norm is the operator norm.  The other norms are
cheaper bounds that bracket it.

Run with ``python3 demos/01_two_by_two.py``.
"""
import numpy as np

from fellgrid import TwistedLineBundle, pair_groupoid
from fellgrid.groupoid import pair_id
from fellgrid.section import Section, all_norms, norm_b, norm_b_oracle, rep_matrices, restrict

bundle = TwistedLineBundle(pair_groupoid(2))

sign = Section.from_pair_matrix(bundle, [[1, 1], [1, -1]])
fib = Section.from_pair_matrix(bundle, [[1, 1], [1, 0]])

print("convolution is matrix multiplication:")
print((fib @ fib).to_pair_matrix().real)

# %% the five norms side by side
for name, a in (("sign", sign), ("fib", fib)):
    n = all_norms(a)
    print(f"{name:5s}", "  ".join(f"{k}={v:.6f}" for k, v in n.items()))

print("sqrt(2) =", np.sqrt(2), "  golden ratio =", (1 + np.sqrt(5)) / 2)

# %% where norm_b comes from
# One block matrix per unit; their largest operator norm is norm_b.
for x, rep in rep_matrices(fib).items():
    print(f"REP at unit {x}:\n{rep.real}")

# A lower bound that only uses convolution: power iteration on a* a.
print("oracle lower bound for fib:", norm_b_oracle(fib))

# %% restricting to arbitrary arrows is not monotone
# Dropping arrow (1,1) from the sign matrix turns it into the Fibonacci matrix,
# and the norm goes up from sqrt(2) to the golden ratio.
r = restrict(sign, [pair_id(2, 0, 0), pair_id(2, 0, 1), pair_id(2, 1, 0)])
print("restricted:", r.to_pair_matrix().real.tolist(), "norm_b", norm_b(sign), "->", norm_b(r))
