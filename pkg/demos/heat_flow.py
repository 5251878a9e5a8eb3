"""The sub-Riemannian Laplacian, its slice spectra and the heat semigroup.

Run: python demos/heat_flow.py
"""
from __future__ import annotations

from qhm.algebra import op_norm
from qhm.core import Grid, ManifoldParams, random_element
from qhm.spectral import heat, heat_operator, heat_positivity_probe, positive_element, trace

params, grid = ManifoldParams(), Grid()
op = heat_operator(params, grid)

# each slice p != 0 is a Landau problem: lowest level c|p|, multiplicity c|p|
for row in op.summary():
    print(f"p = {row['p']:+d}: lowest eigenvalue {row['min_eigenvalue']:.6f}, kernel dim {row['kernel_dim']}")

e = random_element(params, grid, seed=9)
print("\nt      trace drift   |heat(e, t)|")
for t in (0.0, 0.1, 1.0, 10.0):
    h = heat(e, t)
    print(f"{t:<6} {abs(trace(h) - trace(e)):.1e}       {op_norm(h):.6f}")

a = random_element(params, grid, seed=10, support=grid.p_max // 2)
probe = heat_positivity_probe(positive_element(a), (0.1, 1.0))
print(f"\npositivity probe on a* a: {probe.to_dict()}")
