"""Elements as fibre matrices: star product, involution and the exact norm.

Run: python demos/algebra_tour.py
"""
from __future__ import annotations

import numpy as np

from qhm.algebra import adjoint, block_operator, op_norm, op_norm_report, star, star_with_loss
from qhm.core import Grid, ManifoldParams, random_element

params, grid = ManifoldParams(), Grid()
a = random_element(params, grid, seed=1, support=2)
b = random_element(params, grid, seed=2, support=2)

# the star product is composition of the fibre matrices
wide = 2 * grid.p_max
inner = slice(wide - grid.p_max, wide + grid.p_max + 1)
lhs = block_operator(star(a, b), wide)[..., inner, inner]
rhs = (block_operator(a, wide) @ block_operator(b, wide))[..., inner, inner]
print(f"star vs block composition: {np.max(np.abs(lhs - rhs)):.2e}")

# full-band inputs lose the |n| > p_max part of the product
_, clipped = star_with_loss(random_element(params, grid, 3), random_element(params, grid, 4))
print(f"clipped mass for full-band inputs: {clipped:.3e}")

# norms: Bloch fibres at this commensurate configuration, compressions below it
rep = op_norm_report(a)
print(f"|a| = {rep.value:.12f} (exact fibres: {rep.exact_fibres})")
for band in (grid.p_max, 16, 32):
    print(f"  compression to |p| <= {band:2d}: {op_norm_report(a, band=band).value:.12f}")
n = op_norm(a)
print(f"C*-identity: |a* a| - |a|^2 = {op_norm(star(adjoint(a), a)) - n * n:.2e}")
