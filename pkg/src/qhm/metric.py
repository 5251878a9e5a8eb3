"""Derivations, the differential ``d`` and the Lipschitz/Hoelder seminorms.

The flows alpha and beta have generators

    delta1(Phi) = -dPhi/dx
    delta2(Phi) = i p c x Phi - dPhi/dy

(sign of delta1 from ``alpha_r(Phi)(x) = Phi(x - r)``).  Suprema over flow
parameters are sampled on a finite grid, so every seminorm reported here is
a lower bound carrying the grid it was taken over.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .action import alpha, beta, gamma
from .algebra import op_norm, stack_norm_report
from .core import Element, dx_values, dy_values


def default_t_grid(n: int = 24, lo: float = 1e-3, hi: float = 4.0) -> list[float]:
    return [float(t) for t in np.geomspace(lo, hi, n)]


def delta1(e: Element) -> Element:
    g = e.grid
    return e.like(-dx_values(e.values, g, e.params.c, g.p))


def delta2(e: Element) -> Element:
    g = e.grid
    px = 1j * e.params.c * g.p[:, None, None] * g.x[None, :, None]
    return e.like(px * e.values - dy_values(e.values, g))


@dataclass(frozen=True)
class CotangentPair:
    first: Element
    second: Element

    def __post_init__(self):
        self.first.compatible(self.second)


def dmap(e: Element) -> CotangentPair:
    return CotangentPair(delta1(e), delta2(e))


def module_norms(pair: CotangentPair) -> tuple[float, float]:
    """``(|<w, w>_l|^(1/2), |<w, w>_r|^(1/2))`` for ``w = a + b``.

    ``|a a* + b b*|^(1/2)`` is the norm of the row operator ``[a b]`` and
    ``|a* a + b* b|^(1/2)`` that of the column ``[a; b]``; both are computed
    that way, which avoids truncating the products to ``|p| <= p_max``.
    """
    els = [pair.first, pair.second]
    return stack_norm_report(els, "row").value, stack_norm_report(els, "col").value


def lip_norm(e: Element) -> float:
    left, right = module_norms(dmap(e))
    return max(op_norm(e), left, right)


@dataclass(frozen=True)
class SeminormReport:
    name: str
    value: float
    sample_grid: list[float]
    argmax_sample: float | None
    argmax_flow: str | None = None
    quotients: dict[str, list[float]] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "samples": list(self.sample_grid),
            "argmax": self.argmax_sample,
            "flow": self.argmax_flow,
        }


def _check_exponent(v: float, name: str) -> float:
    v = float(v)
    if not 0.0 < v <= 1.0:
        raise ValueError(f"exponent {name} must lie in (0, 1], got {v}")
    return v


def flow_quotients(e: Element, A: float, B: float, C: float, t_grid: Sequence[float]) -> dict[str, list[float]]:
    """``|e - flow_t(e)| / t^exp`` for each flow over the grid."""
    flows = (("alpha", alpha, A), ("beta", beta, B), ("gamma", gamma, C))
    return {
        name: [op_norm(e - f(e, t)) / t**ex for t in t_grid]
        for name, f, ex in flows
    }


def holder_seminorm(
    e: Element,
    A: float = 1.0,
    B: float = 1.0,
    C: float = 0.5,
    t_grid: Sequence[float] | None = None,
) -> SeminormReport:
    """Sampled ``L^{A,B,C}``: max of the three flow difference quotients."""
    A, B, C = (_check_exponent(v, n) for v, n in ((A, "A"), (B, "B"), (C, "C")))
    ts = default_t_grid() if t_grid is None else [float(t) for t in t_grid]
    if not ts or any(not (t > 0 and math.isfinite(t)) for t in ts):
        raise ValueError("t_grid must be a nonempty list of positive reals")
    q = flow_quotients(e, A, B, C, ts)
    value, arg, flow = 0.0, None, None
    for name, vals in q.items():
        i = int(np.argmax(vals))
        if vals[i] > value:
            value, arg, flow = float(vals[i]), ts[i], name
    return SeminormReport(f"L^({A:g},{B:g},{C:g})", value, ts, arg, flow, q)


@dataclass(frozen=True)
class ComparisonReport:
    gamma_margin: float  # min_t 4 sqrt(t/c) - |gamma_t x - x|
    lip_margin: float  # 2 max(|x|, L(x)) - |x|_L
    lip_norm: float
    holder: float
    norm: float

    def passed(self, slack: float = 1e-8) -> bool:
        return self.gamma_margin >= -slack and self.lip_margin >= -slack

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma_margin": self.gamma_margin,
            "lip_margin": self.lip_margin,
            "lip_norm": self.lip_norm,
            "holder": self.holder,
            "norm": self.norm,
        }


def theorem19_check(e: Element, t_grid: Sequence[float] | None = None) -> ComparisonReport:
    """Check both comparison estimates for ``x = e / lip_norm(e)``."""
    lip = lip_norm(e)
    if lip == 0:
        raise ValueError("zero element has no normalisation")
    x = e / lip
    ts = default_t_grid() if t_grid is None else list(t_grid)
    c = e.params.c
    rep = holder_seminorm(x, 1.0, 1.0, 0.5, ts)
    gq = rep.quotients["gamma"]
    # gamma quotient is |gamma_t x - x| / sqrt(t)
    gm = min(4 * math.sqrt(t / c) - q * math.sqrt(t) for t, q in zip(ts, gq))
    nx = op_norm(x)
    lx = lip_norm(x)
    return ComparisonReport(gm, 2 * max(nx, rep.value) - lx, lx, rep.value, nx)
