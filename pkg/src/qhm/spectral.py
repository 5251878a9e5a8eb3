"""Trace, GNS inner product, sub-Riemannian Laplacian and heat semigroup.

Sign convention: ``laplacian`` is ``delta1^2 + delta2^2``, a negative
semidefinite operator for the GNS inner product.  The heat semigroup is the
contraction semigroup it generates, ``heat(e, t) = exp(t * laplacian) e``;
``HeatOperator`` stores the spectrum of the positive operator ``-laplacian``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Sequence

import numpy as np

from .action import GroupPoint, act
from .algebra import adjoint, apply, fibre_spectrum_min, op_norm, star
from .core import Element, Grid, ManifoldParams, StateVector, dx_values, dy_values
from .metric import delta1, delta2

KERNEL_TOL = 1e-8
NEGATIVE_FAULT = 1e-6


def trace(e: Element) -> complex:
    """Mean of the p = 0 slice (so the identity has trace 1)."""
    return complex(np.mean(e.slice(0)))


def vacuum_state(params: ManifoldParams, grid: Grid) -> StateVector:
    """Indicator of the p = 0 copy of the fundamental domain."""
    vals = np.zeros(grid.shape, dtype=complex)
    vals[grid.index(0)] = 1.0
    return StateVector(params, grid, vals)


def gns_inner_routes(a: Element, b: Element) -> tuple[complex, complex, complex]:
    """``<a, b>`` by the state, trace and coefficient routes."""
    a.compatible(b)
    xi0 = vacuum_state(a.params, a.grid)
    state = apply(a, xi0).inner(apply(b, xi0))
    via_trace = trace(star(adjoint(b), a))
    coef = complex(np.vdot(b.values, a.values) / a.grid.nx / a.grid.ny)
    return state, via_trace, coef


def gns_inner(a: Element, b: Element, tol: float = 1e-9) -> complex:
    """GNS inner product ``tau(b* a)``, linear in ``a``.

    The three routes are compared and a ``ValueError`` is raised when they
    disagree by more than ``tol`` relative to the norms of ``a`` and ``b``.
    """
    s, t, c = gns_inner_routes(a, b)
    scale = max(1.0, math.sqrt(abs(gns_inner_routes(a, a)[2]) * abs(gns_inner_routes(b, b)[2])))
    if max(abs(s - c), abs(t - c)) > tol * scale:
        raise ValueError(f"GNS routes disagree: state {s}, trace {t}, coefficients {c}")
    return c


def trace_invariance_check(e: Element, g_samples: Iterable[GroupPoint]) -> float:
    t0 = trace(e)
    return max((abs(trace(act(e, g)) - t0) for g in g_samples), default=0.0)


def traciality_defect(a: Element, b: Element) -> float:
    return abs(trace(star(a, b)) - trace(star(b, a)))


# ---------------------------------------------------------------------------
# Laplacian


def laplacian(e: Element) -> Element:
    """``Phi_xx - p^2 c^2 x^2 Phi - 2 i p c x Phi_y + Phi_yy`` with spectral derivatives."""
    g, c = e.grid, e.params.c
    v = e.values
    px = c * g.p[:, None, None] * g.x[None, :, None]
    dxx = dx_values(dx_values(v, g, c, g.p), g, c, g.p)
    dy = dy_values(v, g)
    dyy = dy_values(dy, g)
    return e.like(dxx - px**2 * v - 2j * px * dy + dyy)


def laplacian_composed(e: Element) -> Element:
    return delta1(delta1(e)) + delta2(delta2(e))


def _slice_generators(params: ManifoldParams, grid: Grid, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of delta1, delta2 on slice ``p`` in the sample basis."""
    n = grid.nx * grid.ny
    basis = np.eye(n, dtype=complex).reshape(n, grid.nx, grid.ny)
    pv = np.full(n, p)
    d1 = -dx_values(basis, grid, params.c, pv)
    px = 1j * params.c * p * grid.x[None, :, None]
    d2 = px * basis - dy_values(basis, grid)
    # column k is the image of basis vector k
    return d1.reshape(n, n).T, d2.reshape(n, n).T


@dataclass(frozen=True)
class SliceSpectrum:
    p: int
    eigenvalues: np.ndarray  # of -laplacian, ascending
    eigenvectors: np.ndarray

    @property
    def kernel_dim(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= KERNEL_TOL * max(1.0, self.eigenvalues[-1])))


class HeatOperator:
    """Per-slice eigendecomposition of ``-laplacian`` (orthonormal in the GNS product)."""

    def __init__(self, params: ManifoldParams, grid: Grid):
        self.params = params
        self.grid = grid
        slices = []
        for p in grid.p:
            d1, d2 = _slice_generators(params, grid, int(p))
            # -(d1^2 + d2^2) = d1* d1 + d2* d2 since both are skew-Hermitian
            h = np.conj(d1.T) @ d1 + np.conj(d2.T) @ d2
            lam, vec = np.linalg.eigh(0.5 * (h + np.conj(h.T)))
            if lam[0] < -NEGATIVE_FAULT:
                raise ArithmeticError(f"-laplacian has eigenvalue {lam[0]:.3g} on slice p={p}")
            vec.setflags(write=False)
            lam.setflags(write=False)
            slices.append(SliceSpectrum(int(p), lam, vec))
        self.slices: tuple[SliceSpectrum, ...] = tuple(slices)

    def evolve(self, e: Element, t: float) -> Element:
        if e.params != self.params or e.grid != self.grid:
            raise ValueError("element does not match this heat operator")
        t = float(t)
        if not t >= 0:
            raise ValueError("heat time must be >= 0")
        g = self.grid
        out = np.empty_like(e.values)
        for s in self.slices:
            v = e.values[g.index(s.p)].reshape(-1)
            w = s.eigenvectors @ (np.exp(-t * s.eigenvalues) * (np.conj(s.eigenvectors.T) @ v))
            out[g.index(s.p)] = w.reshape(g.nx, g.ny)
        return e.like(out)

    def min_eigenvalue(self) -> float:
        return float(min(s.eigenvalues[0] for s in self.slices))

    def summary(self) -> list[dict[str, Any]]:
        return [
            {
                "p": s.p,
                "min_eigenvalue": float(s.eigenvalues[0]),
                "max_eigenvalue": float(s.eigenvalues[-1]),
                "kernel_dim": s.kernel_dim,
            }
            for s in self.slices
        ]


@lru_cache(maxsize=8)
def heat_operator(params: ManifoldParams, grid: Grid) -> HeatOperator:
    return HeatOperator(params, grid)


def heat(e: Element, t: float) -> Element:
    return heat_operator(e.params, e.grid).evolve(e, t)


# ---------------------------------------------------------------------------
# probes and reports


@dataclass(frozen=True)
class HeatProbe:
    min_eigenvalue: float
    gns_excess: float  # max of |h|_gns - |e|_gns over samples
    norm_excess: float  # max of op_norm(h) - op_norm(e)

    def passed(self, slack: float = 1e-6) -> bool:
        return self.min_eigenvalue >= -slack and self.gns_excess <= slack and self.norm_excess <= slack

    def to_dict(self) -> dict[str, float]:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "gns_excess": self.gns_excess,
            "norm_excess": self.norm_excess,
        }


def positive_element(a: Element) -> Element:
    """``a* a``; exact (no clipped slices) when ``a`` lives on ``|p| <= p_max / 2``."""
    return star(adjoint(a), a)


def heat_positivity_probe(e: Element, t_samples: Sequence[float] = (0.1, 1.0)) -> HeatProbe:
    """Evolve ``e`` (meant to be positive) and record positivity and contraction."""
    gn = math.sqrt(abs(gns_inner_routes(e, e)[2]))
    nrm = op_norm(e)
    lo, gx, nx = math.inf, -math.inf, -math.inf
    for t in t_samples:
        h = heat(e, t)
        herm = 0.5 * (h + adjoint(h))
        lo = min(lo, fibre_spectrum_min(herm))
        gx = max(gx, math.sqrt(abs(gns_inner_routes(h, h)[2])) - gn)
        nx = max(nx, op_norm(h) - nrm)
    return HeatProbe(lo, gx, nx)


def heat_report(e: Element, ts: Sequence[float] = (0.1, 1.0, 10.0)) -> dict[str, Any]:
    """Spectral summary and conservation residuals for ``e``."""
    op = heat_operator(e.params, e.grid)
    t0 = trace(e)
    rows = []
    for t in ts:
        h = op.evolve(e, t)
        rows.append({
            "t": float(t),
            "trace_residual": abs(trace(h) - t0),
            "gns_norm": math.sqrt(abs(gns_inner_routes(h, h)[2])),
        })
    return {"slices": op.summary(), "conservation": rows}


def heat_report_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "min_eigenvalue", "max_eigenvalue", "kernel_dim"])
    for s in report["slices"]:
        w.writerow([s["p"], repr(s["min_eigenvalue"]), repr(s["max_eigenvalue"]), s["kernel_dim"]])
    w.writerow([])
    w.writerow(["t", "trace_residual", "gns_norm"])
    for r in report["conservation"]:
        w.writerow([repr(r["t"]), repr(r["trace_residual"]), repr(r["gns_norm"])])
    return buf.getvalue()
