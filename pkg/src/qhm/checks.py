"""Named numerical checks replayed by ``qhm verify``.

Every check returns a ``CheckResult`` whose ``margin`` is positive when the
check passes (tolerance minus measured error, or measured value minus a
lower threshold).  Inputs are drawn from seeds derived from the run seed,
so a run is a pure function of its configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .action import (
    GroupPoint,
    act,
    alpha,
    beta,
    cesaro,
    commutant_residuals,
    dx_sup,
    fejer_kernel,
    fourier_coeff,
    fourier_coeff_quadrature,
    gamma,
    twisted_smooth,
    unitary_L,
    unitary_L_inverse,
)
from .algebra import (
    adjoint,
    apply,
    apply_blocks,
    block_operator,
    identity_element,
    op_norm,
    star,
)
from .classical import (
    cc_distance_upper,
    gluing_residual,
    group_mul,
    lipschitz_check,
    to_function,
)
from .core import (
    Element,
    Grid,
    ManifoldParams,
    covariant_sample,
    random_element,
    random_state,
    shift_x,
    single_slice,
)
from .metric import (
    default_t_grid,
    delta1,
    delta2,
    dmap,
    holder_seminorm,
    module_norms,
    theorem19_check,
)
from .spectral import (
    gns_inner_routes,
    heat,
    heat_operator,
    heat_positivity_probe,
    laplacian,
    laplacian_composed,
    positive_element,
    trace,
    trace_invariance_check,
    traciality_defect,
)


@dataclass(frozen=True)
class CheckResult:
    check: str
    statement: str
    margin: float
    passed: bool
    measured: float

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "paper_ref": self.statement,
            "margin": self.margin,
            "pass": self.passed,
            "measured": self.measured,
        }


@dataclass(frozen=True)
class Context:
    params: ManifoldParams
    grid: Grid
    seed: int = 0
    quick: bool = False

    def count(self, n: int) -> int:
        return max(2, n // 5) if self.quick else n

    def elements(self, n: int, offset: int, **kw) -> list[Element]:
        base = 1000 * self.seed + offset
        return [random_element(self.params, self.grid, base + k, **kw) for k in range(self.count(n))]

    def rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b))) / (scale if scale > 0 else 1.0)


CheckFn = Callable[[Context], tuple[float, float]]  # (measured, tolerance); pass iff measured <= tol
_REGISTRY: list[tuple[str, str, CheckFn, str]] = []


def check(name: str, statement: str, kind: str = "upper"):
    """Register ``fn(ctx) -> (measured, bound)``; kind 'upper' passes iff measured <= bound."""

    def deco(fn: CheckFn) -> CheckFn:
        _REGISTRY.append((name, statement, fn, kind))
        return fn

    return deco


def names() -> list[str]:
    return [n for n, *_ in _REGISTRY]


def run(ctx: Context, filt: str | None = None) -> list[CheckResult]:
    keys = [k.strip() for k in filt.split(",")] if filt else None
    out = []
    for name, statement, fn, kind in _REGISTRY:
        if keys is not None and not any(k in name for k in keys):
            continue
        measured, bound = fn(ctx)
        margin = bound - measured if kind == "upper" else measured - bound
        out.append(CheckResult(name, statement, float(margin), bool(margin >= 0), float(measured)))
    return out


def _pairs(ctx: Context, n: int, offset: int, **kw):
    xs = ctx.elements(2 * n, offset, **kw)
    return list(zip(xs[0::2], xs[1::2]))


# ---------------------------------------------------------------------------
# core


@check("core.covariance_wrap", "covariance rule holds at wrap points")
def _(ctx):
    e = ctx.elements(1, 1)[0]
    rng = ctx.rng(1)
    worst = 0.0
    for _ in range(ctx.count(100)):
        x, y = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1)
        p = int(rng.integers(-ctx.grid.p_max, ctx.grid.p_max + 1))
        a = covariant_sample(e, x + 2 * math.pi, y, p)
        b = np.exp(2j * math.pi * ctx.params.c * p * y) * covariant_sample(e, x, y, p)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst, 1e-10


@check("core.shift_roundtrip", "shift_x by r then -r is the identity")
def _(ctx):
    e = ctx.elements(1, 2)[0]
    rng = ctx.rng(2)
    return max(_rel(shift_x(shift_x(e, r), -r).values, e.values) for r in rng.uniform(-3, 3, ctx.count(20))), 1e-9


@check("core.state_norm", "state norm is absolutely homogeneous")
def _(ctx):
    xi = random_state(ctx.params, ctx.grid, ctx.seed)
    lam = complex(*ctx.rng(3).normal(size=2))
    return abs((lam * xi).norm() - abs(lam) * xi.norm()) / xi.norm(), 1e-12


# ---------------------------------------------------------------------------
# algebra


@check("algebra.apply_vs_blocks", "direct action equals fibre block assembly")
def _(ctx):
    worst = 0.0
    for k, e in enumerate(ctx.elements(5, 10)):
        xi = random_state(ctx.params, ctx.grid, 1000 * ctx.seed + k)
        worst = max(worst, _rel(apply(e, xi).values, apply_blocks(block_operator(e), xi).values))
    return worst, 1e-10


@check("algebra.star_composition", "star product realises operator composition")
def _(ctx):
    wide = 2 * ctx.grid.p_max
    worst = 0.0
    for a, b in _pairs(ctx, 20, 20, support=ctx.grid.p_max // 2):
        lhs = block_operator(star(a, b), wide)
        rhs = block_operator(a, wide) @ block_operator(b, wide)
        inner = slice(wide - ctx.grid.p_max, wide + ctx.grid.p_max + 1)
        worst = max(worst, _rel(lhs[..., inner, inner], rhs[..., inner, inner]))
    return worst, 1e-9


@check("algebra.star_unit", "identity is a two-sided unit")
def _(ctx):
    e = ctx.elements(1, 21)[0]
    one = identity_element(ctx.params, ctx.grid)
    return max(_rel(star(e, one).values, e.values), _rel(star(one, e).values, e.values)), 1e-12


@check("algebra.adjoint", "involution is the fibrewise conjugate transpose")
def _(ctx):
    worst = 0.0
    for e in ctx.elements(20, 30):
        b = block_operator(e)
        worst = max(worst, _rel(block_operator(adjoint(e)), np.conj(np.swapaxes(b, -1, -2))))
    return worst, 1e-10


@check("algebra.cstar", "C*-identity |a* a| = |a|^2")
def _(ctx):
    worst = 0.0
    for a in ctx.elements(5, 40, support=ctx.grid.p_max // 2):
        n = op_norm(a)
        worst = max(worst, abs(op_norm(star(adjoint(a), a)) - n * n) / (n * n))
    return worst, 1e-6


@check("algebra.associativity", "star product is associative")
def _(ctx):
    worst = 0.0
    xs = ctx.elements(9, 50, support=max(1, ctx.grid.p_max // 3))
    for a, b, c in zip(xs[0::3], xs[1::3], xs[2::3]):
        worst = max(worst, _rel(star(a, star(b, c)).values, star(star(a, b), c).values))
    return worst, 1e-8


@check("algebra.apply_bound", "|e xi| <= |e| |xi|")
def _(ctx):
    worst = -math.inf
    for k, e in enumerate(ctx.elements(10, 60)):
        xi = random_state(ctx.params, ctx.grid, 1000 * ctx.seed + 60 + k)
        worst = max(worst, apply(e, xi).norm() - op_norm(e) * xi.norm())
    return worst, 1e-9


@check("algebra.single_slice_norm", "a single slice has norm equal to its sup")
def _(ctx):
    e = ctx.elements(1, 70)[0]
    worst = 0.0
    for p in ctx.grid.p:
        s = single_slice(ctx.params, ctx.grid, int(p), e.slice(int(p)))
        worst = max(worst, abs(op_norm(s) - s.sup()) / s.sup())
    return worst, 1e-9


# ---------------------------------------------------------------------------
# action


@check("action.conjugation", "the action is conjugation by U_(r,s,t) (grid-commensurate r, s)")
def _(ctx):
    worst = 0.0
    for k, e in enumerate(ctx.elements(5, 80)):
        xi = random_state(ctx.params, ctx.grid, 1000 * ctx.seed + 80 + k)
        g = GroupPoint(ctx.grid.dx * (k + 1), ctx.grid.dy * (k + 2), 0.3 * k)
        lhs = apply(act(e, g), xi).values
        rhs = unitary_L(apply(e, unitary_L_inverse(xi, g)), g).values
        worst = max(worst, _rel(lhs, rhs))
    return worst, 1e-9


@check("action.group_law", "alpha, beta, gamma are one-parameter groups")
def _(ctx):
    e = ctx.elements(1, 90)[0]
    rng = ctx.rng(90)
    worst = 0.0
    for f in (alpha, beta, gamma):
        r1, r2 = rng.uniform(-1, 1, 2)
        worst = max(worst, _rel(f(f(e, r1), r2).values, f(e, r1 + r2).values))
    return worst, 1e-9


@check("action.isometry", "the flows preserve the operator norm (grid-commensurate shifts)")
def _(ctx):
    e = ctx.elements(1, 91)[0]
    n = op_norm(e)
    g = ctx.grid
    rng = ctx.rng(91)
    moved = [alpha(e, 3 * g.dx), beta(e, 5 * g.dy), gamma(e, float(rng.uniform(-3, 3)))]
    return max(abs(op_norm(m) - n) / n for m in moved), 1e-9


@check("action.commutants", "elements commute with V_f, W_k, X_r")
def _(ctx):
    worst = 0.0
    for k, e in enumerate(ctx.elements(20, 100)):
        worst = max(worst, *commutant_residuals(e, probes=ctx.count(10), seed=ctx.seed * 1000 + k))
    return worst, 1e-8


@check("action.commutants_negative", "corrupted operator fails the W_k test", kind="lower")
def _(ctx):
    e = ctx.elements(1, 101)[0]
    return commutant_residuals(e, probes=3, seed=ctx.seed, corruption=1e-2)[1], 1e-3


@check("action.fourier_quadrature", "quadrature Fourier coefficient is the slice projection")
def _(ctx):
    e = ctx.elements(1, 110)[0]
    nt = 2 * ctx.grid.p_max + 8
    return max(
        _rel(fourier_coeff_quadrature(e, n, nt).values, fourier_coeff(e, n).values) if np.any(e.slice(n)) else 0.0
        for n in range(-ctx.grid.p_max, ctx.grid.p_max + 1)
    ), 1e-12


@check("action.fejer_mass", "Fejer kernel has unit mean")
def _(ctx):
    worst = 0.0
    for N in (0, 1, 4, 16):
        ts = -math.pi + 2 * math.pi * np.arange(4 * N + 8) / (4 * N + 8)
        worst = max(worst, abs(np.mean([fejer_kernel(N, t) for t in ts]) - 1))
    return worst, 1e-10


@check("action.cesaro_bound", "Cesaro error within the slice-norm bound")
def _(ctx):
    e = ctx.elements(1, 120)[0]
    norms = {int(p): op_norm(fourier_coeff(e, int(p))) for p in ctx.grid.p}
    worst = -math.inf
    for N in (4, 8, 16, 32):
        err = op_norm(cesaro(e, N) - e)
        bound = sum(abs(p) / (N + 1) * v for p, v in norms.items())
        worst = max(worst, err - bound)
    return worst, 1e-12


@check("action.cesaro_rate", "Cesaro error decays like 1/N")
def _(ctx):
    e = ctx.elements(1, 121)[0]
    scaled = [(N + 1) * op_norm(cesaro(e, N) - e) for N in (4, 8, 16, 32)]
    return (max(scaled) - min(scaled)) / max(scaled), 1e-6


@check("action.fourier_cesaro", "a_n of the Cesaro mean is the weighted a_n")
def _(ctx):
    e = ctx.elements(1, 122)[0]
    N = 3
    worst = 0.0
    for n in range(-N, N + 1):
        lhs = fourier_coeff(cesaro(e, N), n).values
        rhs = (1 - abs(n) / (N + 1)) * fourier_coeff(e, n).values
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-14


@check("action.commutator_flow", "gamma_t equals the group commutator of alpha and beta")
def _(ctx):
    worst = 0.0
    for e in ctx.elements(10, 130):
        for t in (0.1, 0.5, 1.0):
            tp = math.sqrt(t / ctx.params.c)
            comp = beta(alpha(beta(alpha(e, tp), tp), -tp), -tp)
            worst = max(worst, op_norm(gamma(e, t) - comp))
    return worst, 1e-8


@check("action.alpha_lipschitz", "|alpha_r e - e| <= r sum_p sup|dPhi/dx|")
def _(ctx):
    worst = -math.inf
    for e in ctx.elements(5, 140):
        f1 = float(np.sum(dx_sup(e, 4)))
        for r in (ctx.grid.dx, 2 * ctx.grid.dx, 4 * ctx.grid.dx):
            worst = max(worst, op_norm(alpha(e, r) - e) - r * f1)
    return worst, 1e-9


@check("action.smoothing_covariance", "twisted smoothing keeps the covariance rule")
def _(ctx):
    e = ctx.elements(1, 150)[0]
    s = twisted_smooth(e, 4)
    rng = ctx.rng(150)
    worst = 0.0
    for _ in range(ctx.count(100)):
        x, y = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1)
        p = int(rng.integers(-ctx.grid.p_max, ctx.grid.p_max + 1))
        a = covariant_sample(s, x + 2 * math.pi, y, p)
        b = np.exp(2j * math.pi * ctx.params.c * p * y) * covariant_sample(s, x, y, p)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst, 1e-9


@check("action.smoothing_monotone", "smoothing error decreases in m")
def _(ctx):
    e = ctx.elements(1, 151)[0]
    errs = [op_norm(twisted_smooth(e, m) - e) for m in (2, 4, 8)]
    return max(errs[1] - errs[0], errs[2] - errs[1]), 0.0


# ---------------------------------------------------------------------------
# metric


@check("metric.derivation_covariance", "derivations of elements are covariant")
def _(ctx):
    e = ctx.elements(1, 160)[0]
    rng = ctx.rng(160)
    worst = 0.0
    for d in (delta1(e), delta2(e)):
        for _ in range(ctx.count(20)):
            x, y = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1)
            p = int(rng.integers(-ctx.grid.p_max, ctx.grid.p_max + 1))
            a = covariant_sample(d, x + 2 * math.pi, y, p)
            b = np.exp(2j * math.pi * ctx.params.c * p * y) * covariant_sample(d, x, y, p)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst, 1e-9


@check("metric.difference_quotient", "difference quotients converge to delta1 at first order", kind="lower")
def _(ctx):
    e = ctx.elements(1, 161)[0]
    errs = [op_norm((alpha(e, r) - e) / r - delta1(e)) for r in (1e-2, 1e-3, 1e-4)]
    return min(math.log10(errs[0] / errs[1]), math.log10(errs[1] / errs[2])), 0.9


@check("metric.leibniz", "d(ab) = a d(b) + d(a) b")
def _(ctx):
    worst = 0.0
    for a, b in _pairs(ctx, 20, 170, support=2):
        ab = star(a, b)
        for dl in (delta1, delta2):
            worst = max(worst, _rel(dl(ab).values, (star(a, dl(b)) + star(dl(a), b)).values))
    return worst, 1e-7


@check("metric.mean_value", "alpha difference quotients are bounded by |delta1|")
def _(ctx):
    e = ctx.elements(1, 180)[0]
    d1 = delta1(e)
    # the norm samples grid fibres; sub-grid translates recover the x-continuum sup
    d = max(op_norm(alpha(d1, k * ctx.grid.dx / 32)) for k in range(32))
    return max(op_norm(alpha(e, r) - e) / r for r in default_t_grid()) - d, 1e-6


@check("metric.holder_monotone", "lower exponents give at most max(L, 2|x|)")
def _(ctx):
    e = ctx.elements(1, 181)[0]
    ts = default_t_grid(12)
    hi = holder_seminorm(e, 1, 1, 0.5, ts).value
    lo = holder_seminorm(e, 0.5, 0.5, 0.25, ts).value
    return lo - max(hi, 2 * op_norm(e)), 1e-12


@check("metric.holder_stability", "sampled (1,1,1) seminorm is stable under refinement")
def _(ctx):
    e = ctx.elements(1, 182)[0]
    v = holder_seminorm(e, 1, 1, 1).value
    dense = default_t_grid(96)
    g = max(op_norm(e - gamma(e, t)) / t for t in dense)
    ref = max(op_norm(delta1(e)), op_norm(delta2(e)), g)
    return abs(v - ref) / ref, 0.10


@check("metric.module_norms_unit", "the pair (1, 0) has unit module norms")
def _(ctx):
    one = identity_element(ctx.params, ctx.grid)
    from .metric import CotangentPair

    left, right = module_norms(CotangentPair(one, 0 * one))
    return max(abs(left - 1), abs(right - 1)), 1e-12


@check("metric.thm19", "gamma modulus and Lipschitz/Hoelder comparison")
def _(ctx):
    ts = default_t_grid()
    worst = -math.inf
    for e in ctx.elements(30, 190):
        rep = theorem19_check(e, ts)
        worst = max(worst, -rep.gamma_margin, -rep.lip_margin)
    return worst, 1e-8


# ---------------------------------------------------------------------------
# spectral


def _group_points(ctx: Context, offset: int, n: int = 5) -> list[GroupPoint]:
    rng = ctx.rng(offset)
    return [GroupPoint(*rng.uniform(-3, 3, 3)) for _ in range(n)]


@check("spectral.trace_invariance", "the trace is invariant under the action")
def _(ctx):
    gs = _group_points(ctx, 200)
    return max(trace_invariance_check(e, gs) for e in ctx.elements(20, 200)), 1e-9


@check("spectral.traciality", "tau(ab) = tau(ba)")
def _(ctx):
    return max(traciality_defect(a, b) for a, b in _pairs(ctx, 20, 210)), 1e-9


@check("spectral.faithfulness", "<a, a> > 0 for nonzero a", kind="lower")
def _(ctx):
    return min(gns_inner_routes(a, a)[2].real for a in ctx.elements(20, 220)), 1e-300


@check("spectral.gns_routes", "state, trace and coefficient routes agree")
def _(ctx):
    worst = 0.0
    for a, b in _pairs(ctx, 20, 230):
        s, t, c = gns_inner_routes(a, b)
        worst = max(worst, abs(s - c), abs(t - c))
    return worst, 1e-9


@check("spectral.laplacian_routes", "closed-form Laplacian equals delta1^2 + delta2^2")
def _(ctx):
    return max(_rel(laplacian(e).values, laplacian_composed(e).values) for e in ctx.elements(20, 240)), 1e-8


@check("spectral.laplacian_selfadjoint", "<La, b> = <a, Lb>")
def _(ctx):
    worst = 0.0
    for a, b in _pairs(ctx, 5, 245):
        worst = max(worst, abs(gns_inner_routes(laplacian(a), b)[2] - gns_inner_routes(a, laplacian(b))[2]))
    return worst, 1e-8


@check("spectral.laplacian_gamma", "the Laplacian commutes with gamma")
def _(ctx):
    e = ctx.elements(1, 246)[0]
    return _rel(laplacian(gamma(e, 0.7)).values, gamma(laplacian(e), 0.7).values), 1e-10


@check("spectral.heat_spectrum", "-Laplacian is positive semidefinite", kind="lower")
def _(ctx):
    return heat_operator(ctx.params, ctx.grid).min_eigenvalue(), -1e-8


@check("spectral.heat_kernel", "the p=0 kernel is one-dimensional")
def _(ctx):
    op = heat_operator(ctx.params, ctx.grid)
    s = op.slices[ctx.grid.index(0)]
    return abs(s.kernel_dim - 1), 0


@check("spectral.heat_semigroup", "heat(heat(e, s), t) = heat(e, s + t)")
def _(ctx):
    worst = 0.0
    for e in ctx.elements(5, 250):
        worst = max(worst, _rel(heat(heat(e, 0.3), 0.7).values, heat(e, 1.0).values))
    return worst, 1e-8


@check("spectral.heat_trace", "heat preserves the trace")
def _(ctx):
    return max(abs(trace(heat(e, t)) - trace(e)) for e in ctx.elements(5, 260) for t in (0.1, 1.0, 10.0)), 1e-9


@check("spectral.heat_long_time", "p=0 slice relaxes to the trace")
def _(ctx):
    e = ctx.elements(1, 265)[0]
    return float(np.max(np.abs(heat(e, 100.0).slice(0) - trace(e)))), 1e-6


@check("spectral.heat_positivity", "heat keeps positive elements positive and contracts", kind="lower")
def _(ctx):
    worst = math.inf
    for a in ctx.elements(20, 270, support=ctx.grid.p_max // 2):
        probe = heat_positivity_probe(positive_element(a), (0.1, 1.0))
        worst = min(worst, probe.min_eigenvalue, -probe.gns_excess, -probe.norm_excess)
    return worst, -1e-6


# ---------------------------------------------------------------------------
# classical


def _classical(ctx: Context) -> tuple[ManifoldParams, Grid]:
    p = ctx.params
    return ManifoldParams(p.c, 0.0, p.mu, p.nu), ctx.grid


@check("classical.star_pointwise", "at hbar = 0 the star product is the pointwise product")
def _(ctx):
    prm, g = _classical(ctx)
    worst = 0.0
    for k in range(ctx.count(5)):
        a = random_element(prm, g, 1000 * ctx.seed + 300 + 2 * k, support=g.p_max // 2)
        b = random_element(prm, g, 1000 * ctx.seed + 301 + 2 * k, support=g.p_max // 2)
        fa, fb, fab = to_function(a), to_function(b), to_function(star(a, b))
        worst = max(worst, _rel(fab.values, fa.values * fb.values))
    return worst, 1e-9


@check("classical.gluing", "functions glue across the x-period")
def _(ctx):
    prm, g = _classical(ctx)
    f = to_function(random_element(prm, g, ctx.seed))
    return gluing_residual(f, ctx.count(100), ctx.seed), 1e-9


@check("classical.cc_straight", "distance along a horizontal line")
def _(ctx):
    return abs(cc_distance_upper((0, 0, 0), (1, 0, 0), seed=ctx.seed).upper_bound - 1), 1e-3


@check("classical.cc_dido", "vertical distance matches the isoperimetric value")
def _(ctx):
    d = cc_distance_upper((0, 0, 0), (0, 0, 0.1), seed=ctx.seed).upper_bound
    return abs(d / (2 * math.sqrt(0.1 * math.pi)) - 1), 0.05


@check("classical.cc_sqrt_z", "vertical distance scales like sqrt(z)")
def _(ctx):
    r = [cc_distance_upper((0, 0, 0), (0, 0, z), seed=ctx.seed).upper_bound / math.sqrt(z)
         for z in (0.025, 0.05, 0.1, 0.2)]
    return (max(r) - min(r)) / min(r), 0.10


@check("classical.cc_right_invariance", "distance is invariant under right translation")
def _(ctx):
    rng = ctx.rng(310)
    g = tuple(rng.uniform(-0.5, 0.5, 3))
    h = tuple(rng.uniform(-1, 1, 3))
    d0 = cc_distance_upper((0, 0, 0), g, seed=ctx.seed).upper_bound
    d1 = cc_distance_upper(group_mul((0, 0, 0), h), group_mul(g, h), seed=ctx.seed).upper_bound
    return abs(d1 - d0) / d0, 0.01


@check("classical.cc_triangle", "triangle inequality within optimiser tolerance")
def _(ctx):
    rng = ctx.rng(320)
    a, b, c = (tuple(rng.uniform(-0.5, 0.5, 3)) for _ in range(3))
    ab = cc_distance_upper(a, b, seed=ctx.seed).upper_bound
    bc = cc_distance_upper(b, c, seed=ctx.seed).upper_bound
    ac = cc_distance_upper(a, c, seed=ctx.seed).upper_bound
    return ac / (ab + bc) - 1, 0.02


@check("classical.cc_projection", "distance dominates the planar displacement", kind="lower")
def _(ctx):
    rng = ctx.rng(330)
    worst = math.inf
    for _ in range(3):
        a, b = rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.5, 0.5, 3)
        d = cc_distance_upper(a, b, seed=ctx.seed).upper_bound
        worst = min(worst, d - math.hypot(*(b - a)[:2]))
    return worst, 0.0


@check("classical.cc_refinement", "doubling the segments never lengthens the path")
def _(ctx):
    r16 = cc_distance_upper((0, 0, 0), (0.2, -0.1, 0.1), seed=ctx.seed)
    r32 = cc_distance_upper((0, 0, 0), (0.2, -0.1, 0.1), n_segments=32, seed=ctx.seed,
                            init=r16.path.refined())
    return r32.upper_bound - r16.upper_bound, 1e-6


@check("classical.lipschitz_sin_y", "ratios for sin(y) stay below the gradient bound")
def _(ctx):
    rep = lipschitz_check(lambda x, y, z: math.sin(y), pairs=ctx.count(10), seed=ctx.seed, c=ctx.params.c)
    return rep.max_ratio / rep.gradient_sup - 1, 0.02


@check("classical.lipschitz_sin_x", "ratios for sin(x) stay below the gradient bound")
def _(ctx):
    rep = lipschitz_check(lambda x, y, z: math.sin(x), pairs=ctx.count(10), seed=ctx.seed, c=ctx.params.c)
    return rep.max_ratio / rep.gradient_sup - 1, 0.02


@check("classical.module_norms", "at hbar = 0 module norms are the sup of |(a, b)|")
def _(ctx):
    prm, g = _classical(ctx)
    e = random_element(prm, g, ctx.seed + 340)
    pair = dmap(e)
    left, right = module_norms(pair)
    f1 = to_function(pair.first, 8 * g.n_p)
    f2 = to_function(pair.second, 8 * g.n_p)
    sup = float(np.max(np.sqrt(np.abs(f1.values) ** 2 + np.abs(f2.values) ** 2)))
    return max(abs(left - sup), abs(right - sup)) / sup, 1e-3

