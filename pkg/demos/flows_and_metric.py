"""The Heisenberg flows, their generators and the Lipschitz/Hoelder comparison.

Run: python demos/flows_and_metric.py
"""
from __future__ import annotations

import math

from qhm.action import alpha, beta, gamma
from qhm.algebra import op_norm
from qhm.core import Grid, ManifoldParams, random_element
from qhm.metric import default_t_grid, holder_seminorm, lip_norm, theorem19_check

params, grid = ManifoldParams(), Grid()
e = random_element(params, grid, seed=5)

# gamma_t is the group commutator of alpha and beta at time sqrt(t)
print("t      |gamma_t e - commutator|")
for t in (0.1, 0.5, 1.0):
    tp = math.sqrt(t / params.c)
    comp = beta(alpha(beta(alpha(e, tp), tp), -tp), -tp)
    print(f"{t:<6} {op_norm(gamma(e, t) - comp):.2e}")

# Lipschitz norm against the sampled (1, 1, 1/2) Hoelder seminorm
rep = holder_seminorm(e, 1, 1, 0.5, default_t_grid())
print(f"lip norm {lip_norm(e):.4f}, Hoelder seminorm {rep.value:.4f} (flow {rep.argmax_flow}, t = {rep.argmax_sample:.3g})")
cmp_ = theorem19_check(e)
print(f"normalised element: gamma margin {cmp_.gamma_margin:.4f}, Lipschitz margin {cmp_.lip_margin:.4f}")
