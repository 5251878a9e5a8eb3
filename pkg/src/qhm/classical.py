"""The commutative case: functions on the Heisenberg manifold and its CC metric.

Points of the group are ``(x, y, z)`` with product

    (x, y, z)(x', y', z') = (x + x', y + y', z + z' + y x')

whose right translations preserve the horizontal frame ``X = d/dx``,
``Y = d/dy + x d/dz``.  At ``hbar = 0`` an element becomes the function
``f(x, y, theta) = sum_p Phi(x, y, p) exp(i p theta)`` with ``theta = -c z``;
the covariance rule turns into invariance under the lattice
``(2 pi, 0, 0)``, ``(0, 1, 0)``, ``(0, 0, 2 pi / c)`` acting on the right.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import Element, covariant_sample, dx_values, dy_values

logger = logging.getLogger(__name__)

Point = tuple[float, float, float]

GAP_TOL = 1e-6
PENALTY_START = 1e2
PENALTY_FACTOR = 10.0
PENALTY_ROUNDS = 6


def group_mul(a: Sequence[float], b: Sequence[float]) -> Point:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[1] * b[0])


def group_inv(a: Sequence[float]) -> Point:
    return (-a[0], -a[1], -a[2] + a[0] * a[1])


# ---------------------------------------------------------------------------
# functions


@dataclass(frozen=True, eq=False)
class ClassicalFunction:
    """Samples ``f(x_i, y_j, theta_k)`` of the function of an ``hbar = 0`` element."""

    element: Element
    n_theta: int
    values: np.ndarray = field(repr=False)

    @property
    def theta(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_theta) / self.n_theta

    def at(self, x: float, y: float, theta: float) -> complex:
        g = self.element.grid
        return complex(sum(
            covariant_sample(self.element, x, y, int(p)) * np.exp(1j * p * theta) for p in g.p
        ))

    def on_cover(self, x: float, y: float, z: float) -> complex:
        return self.at(x, y, -self.element.params.c * z)

    def gradient_sup(self) -> float:
        """``sup sqrt(|Xf|^2 + |Yf|^2)`` over the chart grid."""
        e = self.element
        g, c = e.grid, e.params.c
        ph = np.exp(1j * np.outer(g.p, self.theta))  # (n_p, n_theta)
        fx = np.einsum("pxy,pk->xyk", dx_values(e.values, g, c, g.p), ph)
        fy = np.einsum("pxy,pk->xyk", dy_values(e.values, g), ph)
        ft = np.einsum("pxy,pk->xyk", e.values, 1j * g.p[:, None] * ph)
        # d/dz = -c d/dtheta
        yf = fy - c * g.x[:, None, None] * ft
        return float(np.max(np.sqrt(np.abs(fx) ** 2 + np.abs(yf) ** 2)))


def to_function(e: Element, n_theta: int | None = None) -> ClassicalFunction:
    if e.params.hbar != 0:
        raise ValueError("to_function needs hbar = 0")
    n = 2 * e.grid.p_max + 2 if n_theta is None else int(n_theta)
    if n < e.grid.n_p:
        raise ValueError(f"n_theta must be >= {e.grid.n_p}")
    theta = 2 * math.pi * np.arange(n) / n
    vals = np.einsum("pxy,pk->xyk", e.values, np.exp(1j * np.outer(e.grid.p, theta)))
    vals.setflags(write=False)
    return ClassicalFunction(e, n, vals)


def gluing_residual(f: ClassicalFunction, n_points: int = 100, seed: int = 0) -> float:
    """Max of ``|f(x + 2pi, y, th) - f(x, y, th + 2pi c y)|`` at random points."""
    rng = np.random.default_rng(seed)
    c = f.element.params.c
    worst = 0.0
    for x, y, th in rng.uniform((0, 0, 0), (2 * math.pi, 1, 2 * math.pi), size=(n_points, 3)):
        a = f.at(x + 2 * math.pi, y, th)
        b = f.at(x, y, th + 2 * math.pi * c * y)
        worst = max(worst, abs(a - b))
    return worst


# ---------------------------------------------------------------------------
# horizontal paths


@dataclass(frozen=True)
class HorizontalPath:
    controls: np.ndarray  # (n_segments, 2), constant (u1, u2) per segment of length 1/n

    def __post_init__(self):
        u = np.array(self.controls, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2 or u.shape[0] < 1:
            raise ValueError("controls must have shape (n_segments, 2), n_segments >= 1")
        u.setflags(write=False)
        object.__setattr__(self, "controls", u)

    @property
    def n_segments(self) -> int:
        return self.controls.shape[0]

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(self.controls[:, 0], self.controls[:, 1])) / self.n_segments)

    def refined(self) -> HorizontalPath:
        """Same path on twice as many segments."""
        return HorizontalPath(np.repeat(self.controls, 2, axis=0))


def _endpoint(u: np.ndarray, start: Sequence[float]) -> np.ndarray:
    n = u.shape[0]
    h = 1.0 / n
    xk = start[0] + h * np.concatenate(([0.0], np.cumsum(u[:-1, 0])))
    z = start[2] + np.sum(u[:, 1] * (xk * h + u[:, 0] * h * h / 2))
    return np.array([start[0] + h * u[:, 0].sum(), start[1] + h * u[:, 1].sum(), z])


def _endpoint_jacobian(u: np.ndarray, start: Sequence[float]) -> np.ndarray:
    """Rows d(x, y, z)/d(u1_0..u1_{n-1}, u2_0..u2_{n-1})."""
    n = u.shape[0]
    h = 1.0 / n
    xk = start[0] + h * np.concatenate(([0.0], np.cumsum(u[:-1, 0])))
    jac = np.zeros((3, 2 * n))
    jac[0, :n] = h
    jac[1, n:] = h
    later = np.concatenate((np.cumsum(u[::-1, 1])[::-1][1:], [0.0]))  # sum_{k > j} u2_k
    jac[2, :n] = u[:, 1] * h * h / 2 + h * h * later
    jac[2, n:] = xk * h + u[:, 0] * h * h / 2
    return jac


def integrate_path(path: HorizontalPath, start: Sequence[float] = (0.0, 0.0, 0.0)) -> tuple[Point, float]:
    """Exact endpoint of ``x' = u1, y' = u2, z' = x u2`` and the path length."""
    end = _endpoint(path.controls, start)
    return (float(end[0]), float(end[1]), float(end[2])), path.length


class DistanceError(RuntimeError):
    def __init__(self, msg: str, best_gap: float):
        super().__init__(msg)
        self.best_gap = best_gap


@dataclass(frozen=True)
class DistanceResult:
    start: Point
    end: Point
    upper_bound: float
    gap: float
    iterations: int
    path: HorizontalPath = field(repr=False)

    def row(self) -> list[Any]:
        return [" ".join(repr(v) for v in self.start), " ".join(repr(v) for v in self.end),
                repr(self.upper_bound), repr(self.gap), self.iterations]


def _project(u: np.ndarray, start, end, steps: int = 8) -> np.ndarray:
    """Gauss-Newton least-norm corrections onto the endpoint constraint."""
    for _ in range(steps):
        gap = _endpoint(u, start) - end
        if np.max(np.abs(gap)) < 1e-13:
            break
        jac = _endpoint_jacobian(u, start)
        du = jac.T @ np.linalg.lstsq(jac @ jac.T, gap, rcond=None)[0]
        u = u - du.reshape(2, -1).T
    return u


def _solve(u0: np.ndarray, start, end, iters: int) -> tuple[np.ndarray, float, int]:
    n = u0.shape[0]
    h = 1.0 / n
    u = u0.copy()
    total = 0
    rho = PENALTY_START
    gap = math.inf
    for _ in range(PENALTY_ROUNDS):

        def fun(v):
            w = v.reshape(2, n).T
            d = _endpoint(w, start) - end
            energy = h * np.sum(v * v)
            grad = 2 * h * v + 2 * rho * (_endpoint_jacobian(w, start).T @ d)
            return energy + rho * float(d @ d), grad

        res = minimize(fun, u.T.reshape(-1), jac=True, method="L-BFGS-B",
                       options={"maxiter": iters, "gtol": 1e-10})
        total += int(res.nit)
        u = _project(res.x.reshape(2, n).T, start, end)
        gap = float(np.linalg.norm(_endpoint(u, start) - end))
        if gap < GAP_TOL and rho >= 1e4:
            break
        rho *= PENALTY_FACTOR
    return u, gap, total


def cc_distance_upper(
    start: Sequence[float],
    end: Sequence[float],
    n_segments: int = 16,
    restarts: int = 8,
    iters: int = 500,
    seed: int = 0,
    init: HorizontalPath | None = None,
) -> DistanceResult:
    """Shortest horizontal path found between two points: an upper bound on d_B.

    Minimises energy plus a penalised endpoint gap (penalty x10 per round),
    snapping onto the endpoint after each round; the best length over the
    restarts (and over ``init``, when given) is returned.
    """
    if n_segments < 4:
        raise ValueError("n_segments must be >= 4")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    start = tuple(float(v) for v in start)
    end_a = np.array(end, dtype=float)
    if not (np.all(np.isfinite(start)) and np.all(np.isfinite(end_a))):
        raise ValueError("endpoints must be finite")
    rng = np.random.default_rng(seed)
    disp = end_a - np.array(start)
    scale = max(float(np.linalg.norm(disp)), 1e-3)
    seeds = []
    if init is not None:
        if init.n_segments != n_segments:
            raise ValueError("init path has a different segment count")
        seeds.append(np.array(init.controls))
    for k in range(restarts):
        u = np.tile(disp[:2], (n_segments, 1))
        if k > 0 or init is not None:
            ang = 2 * math.pi * np.arange(n_segments) / n_segments + rng.uniform(0, 2 * math.pi)
            rad = rng.uniform(0.5, 2.0) * math.sqrt(scale)
            u = u + rad * np.column_stack((np.cos(ang), np.sin(ang))) * rng.choice([-1, 1])
            u = u + 0.1 * scale * rng.normal(size=u.shape)
        seeds.append(u)
    best: DistanceResult | None = None
    best_gap = math.inf
    for i, u0 in enumerate(seeds):
        if init is not None and i == 0:
            u = _project(u0, start, end_a)
            gap = float(np.linalg.norm(_endpoint(u, start) - end_a))
            cand = [(u, gap, 0)]
            cand.append(_solve(u, start, end_a, iters))
        else:
            cand = [_solve(u0, start, end_a, iters)]
        for u, gap, its in cand:
            best_gap = min(best_gap, gap)
            if gap >= GAP_TOL:
                continue
            path = HorizontalPath(u)
            if best is None or path.length < best.upper_bound:
                best = DistanceResult(start, tuple(float(v) for v in end_a), path.length, gap, its, path)
    if best is None:
        raise DistanceError(f"endpoint gap {best_gap:.3g} above {GAP_TOL} after all restarts", best_gap)
    return best


def distance_table_csv(results: Sequence[DistanceResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start", "end", "upper_bound", "gap", "iterations"])
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Lipschitz numbers


CoverFunction = Callable[[float, float, float], float]


@dataclass(frozen=True)
class LipschitzReport:
    gradient_sup: float
    max_ratio: float
    ratios: list[float]
    distances: list[DistanceResult] = field(repr=False)
    tol: float = 0.02

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.gradient_sup * (1 + self.tol) + 1e-12

    def to_dict(self) -> dict[str, Any]:
        return {"gradient_sup": self.gradient_sup, "max_ratio": self.max_ratio,
                "ratios": self.ratios, "pass": self.passed}


def _cover_gradient_sup(f: CoverFunction, c: int, n: int = 24, h: float = 1e-5) -> float:
    """Central-difference ``sup |(Xf, Yf)|`` over a grid of one lattice cell."""
    xs = 2 * math.pi * np.arange(n) / n
    ys = np.arange(n) / n
    zs = 2 * math.pi / c * np.arange(n) / n
    best = 0.0
    for x in xs:
        for y in ys:
            for z in zs:
                fx = (f(x + h, y, z) - f(x - h, y, z)) / (2 * h)
                fy = (f(x, y + h, z + x * h) - f(x, y - h, z - x * h)) / (2 * h)
                best = max(best, math.hypot(abs(fx), abs(fy)))
    return best


def lipschitz_check(
    f: ClassicalFunction | CoverFunction,
    pairs: int = 12,
    seed: int = 0,
    c: int = 1,
    tol: float = 0.02,
    spread: float = 0.5,
    n_segments: int = 16,
    restarts: int = 2,
) -> LipschitzReport:
    """Compare sampled difference ratios against the horizontal-gradient sup ``G``.

    ``f`` is a ``ClassicalFunction`` or any callable ``f(x, y, z)`` on the
    group (used for functions such as ``sin(y)`` that only live on the
    cover).  Each ratio ``|f(a) - f(b)| / cc_distance_upper(a, b)`` is a
    lower bound for the Lipschitz number, so none should exceed ``G``.
    """
    if isinstance(f, ClassicalFunction):
        G = f.gradient_sup()
        c = f.element.params.c

        def fv(x, y, z):
            return f.on_cover(x, y, z)
    else:
        G = _cover_gradient_sup(f, c)
        fv = f
    rng = np.random.default_rng(seed)
    ratios, dists = [], []
    for k in range(pairs):
        a = rng.uniform((0, 0, 0), (2 * math.pi, 1, 2 * math.pi / c))
        b = a + spread * rng.uniform(-1, 1, size=3)
        d = cc_distance_upper(a, b, n_segments=n_segments, restarts=restarts, seed=seed + k)
        if d.upper_bound < 1e-8:
            raise ValueError("degenerate pair: distance below 1e-8")
        dists.append(d)
        ratios.append(abs(fv(*a) - fv(*b)) / d.upper_bound)
    return LipschitzReport(G, max(ratios, default=0.0), ratios, dists, tol)
