"""The hbar = 0 limit: pointwise products and Carnot-Caratheodory distances.

Run: python demos/classical_geometry.py
"""
from __future__ import annotations

import math

import numpy as np

from qhm.algebra import star
from qhm.classical import cc_distance_upper, lipschitz_check, to_function
from qhm.core import Grid, ManifoldParams, random_element

params, grid = ManifoldParams(hbar=0.0), Grid()
a = random_element(params, grid, seed=1, support=2)
b = random_element(params, grid, seed=2, support=2)
fa, fb, fab = to_function(a), to_function(b), to_function(star(a, b))
print(f"star vs pointwise product: {np.max(np.abs(fab.values - fa.values * fb.values)):.2e}")

# vertical distances: the best loop is a circle enclosing area z
print("\nz       d(0, (0,0,z))   2 sqrt(pi z)")
for z in (0.025, 0.05, 0.1, 0.2):
    d = cc_distance_upper((0, 0, 0), (0, 0, z)).upper_bound
    print(f"{z:<7} {d:.5f}         {2 * math.sqrt(math.pi * z):.5f}")

rep = lipschitz_check(lambda x, y, z: math.sin(y), pairs=6)
print(f"\nsin(y): gradient sup {rep.gradient_sup:.4f}, largest sampled ratio {rep.max_ratio:.4f}")
