"""Numerical quantum Heisenberg manifolds.

Submodules: ``core`` (grids, sampled elements and states), ``algebra``
(action, star product, norms), ``action`` (group flows and harmonic
analysis), ``metric`` (derivations and seminorms), ``spectral`` (trace,
Laplacian, heat semigroup), ``classical`` (the commutative case and its
Carnot-Caratheodory metric), ``checks`` and ``cli``.
"""

__version__ = "0.1.0"
