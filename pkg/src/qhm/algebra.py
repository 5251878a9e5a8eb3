"""The represented algebra: action on states, star product, involution, norm.

An element acts fibrewise over the grid points ``(x_i, y_j)``:

    (Phi xi)(x, y, p) = sum_q Phi(x - hbar (q - 2p) mu, y - hbar (q - 2p) nu, q) xi(x, y, p - q)

so each fibre carries a matrix indexed by ``p``.  When ``hbar mu`` and
``hbar nu`` are grid-commensurate these infinite matrices are periodic in
``p`` up to a diagonal unitary gauge, and the exact operator norm on
``l^2(Z)`` is a supremum over Bloch quasi-momenta of finite matrices.
Otherwise the norm falls back to a compression onto a wide p-band.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import Element, Grid, ManifoldParams, StateVector, translate_values

logger = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAXITER = 500
N_KAPPA = 32
KAPPA_TOL = 1e-5  # bracket width; the norm is quadratic at its peak


def _check(a, b) -> None:
    if a.params != b.params or a.grid != b.grid:
        raise ValueError("operands differ in params or grid")


def identity_element(params: ManifoldParams, grid: Grid) -> Element:
    vals = np.zeros(grid.shape, dtype=complex)
    vals[grid.index(0)] = 1.0
    return Element(params, grid, vals)


class _Shifts:
    """Memoised samples of ``Phi(x + hbar m mu, y + hbar m nu, q)`` keyed by m."""

    def __init__(self, e: Element):
        self.e = e
        self._cache: dict[int, np.ndarray] = {}

    def __call__(self, m: int) -> np.ndarray:
        if m not in self._cache:
            e = self.e
            h = e.params.hbar
            self._cache[m] = translate_values(
                e.values, e.grid, e.params.c, e.grid.p, h * m * e.params.mu, h * m * e.params.nu
            )
        return self._cache[m]


def block_operator(e: Element, band: int | None = None) -> np.ndarray:
    """Fibre matrices of ``e`` acting on states supported in ``|p| <= band``.

    Returns shape ``(nx, ny, 2 band + 1, 2 band + 1)``; entry ``[i, j, p, p']``
    is the coefficient of ``xi(x_i, y_j, p')`` in ``(e xi)(x_i, y_j, p)``.
    """
    g = e.grid
    band = g.p_max if band is None else band
    size = 2 * band + 1
    out = np.zeros((g.nx, g.ny, size, size), dtype=complex)
    shifted = _Shifts(e)
    for p in range(-band, band + 1):
        for q in range(-g.p_max, g.p_max + 1):
            pp = p - q
            if abs(pp) > band:
                continue
            out[:, :, p + band, pp + band] = shifted(-(q - 2 * p))[g.index(q)]
    return out


def apply_blocks(blocks: np.ndarray, xi: StateVector) -> StateVector:
    """Fibrewise matrix-vector product (the block-operator route of ``apply``)."""
    v = np.moveaxis(xi.values, 0, -1)
    out = np.einsum("xyab,xyb->xya", blocks, v)
    return xi.like(np.moveaxis(out, -1, 0))


def apply(e: Element, xi: StateVector) -> StateVector:
    """Action of ``e`` on a state, summed directly over ``q``."""
    _check(e, xi)
    g = e.grid
    P = g.p_max
    shifted = _Shifts(e)
    out = np.zeros(g.shape, dtype=complex)
    for p in range(-P, P + 1):
        for q in range(max(-P, p - P), min(P, p + P) + 1):
            coef = shifted(-(q - 2 * p))[g.index(q)]
            out[g.index(p)] += coef * xi.values[g.index(p - q)]
    return xi.like(out)


def star_with_loss(a: Element, b: Element) -> tuple[Element, float]:
    """Star product and the largest modulus among the clipped ``|n| > p_max`` slices.

    (a * b)(u, v, n) = sum_q a(u + hbar (n - q) mu, v + hbar (n - q) nu, q)
                            b(u - hbar q mu, v - hbar q nu, n - q)
    """
    _check(a, b)
    g = a.grid
    P = g.p_max
    sa, sb = _Shifts(a), _Shifts(b)
    out = np.zeros(g.shape, dtype=complex)
    clipped = 0.0
    for n in range(-2 * P, 2 * P + 1):
        acc = np.zeros((g.nx, g.ny), dtype=complex)
        for q in range(max(-P, n - P), min(P, n + P) + 1):
            acc += sa(n - q)[g.index(q)] * sb(-q)[g.index(n - q)]
        if abs(n) <= P:
            out[g.index(n)] = acc
        else:
            clipped = max(clipped, float(np.max(np.abs(acc))))
    return Element(a.params, g, out), clipped


def star(a: Element, b: Element) -> Element:
    return star_with_loss(a, b)[0]


def adjoint(a: Element) -> Element:
    """Involution: ``a*(x, y, p) = conj(a(x, y, -p))``."""
    return a.like(np.conj(a.values[::-1]))


# ---------------------------------------------------------------------------
# operator norm


@dataclass(frozen=True)
class NormResult:
    value: float
    converged: bool
    exact_fibres: bool  # False when the p-band compression fallback was used


def _gram(mats: list[np.ndarray], side: str) -> np.ndarray:
    """``sum M* M`` (column stack) or ``sum M M*`` (row stack) over fibres."""
    out = 0
    for m in mats:
        mh = np.conj(np.swapaxes(m, -1, -2))
        out = out + (mh @ m if side == "col" else m @ mh)
    return out


def _eigh_norms(h: np.ndarray) -> tuple[np.ndarray, bool]:
    return np.sqrt(np.maximum(np.linalg.eigvalsh(h)[..., -1], 0.0)), True


def _power_norms(h: np.ndarray) -> tuple[np.ndarray, bool]:
    """``sqrt(lambda_max)`` of a stack of PSD matrices by power iteration.

    Matrices that miss ``POWER_TOL`` within ``POWER_MAXITER`` steps are
    finished with a dense Hermitian eigensolve; the flag reports that.
    """
    shape = h.shape[:-2]
    n = h.shape[-1]
    h = h.reshape(-1, n, n)
    # iterate with H^4 (scaled) so each sweep does four power steps
    scale = np.maximum(np.real(np.trace(h, axis1=-2, axis2=-1)), 1e-300)[:, None, None]
    h2 = (h / scale) @ (h / scale)
    h4 = h2 @ h2
    rng = np.random.default_rng(0)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v = np.broadcast_to(v / np.linalg.norm(v), (h.shape[0], n)).copy()
    lam = np.full(h.shape[0], -1.0)
    active = np.ones(h.shape[0], dtype=bool)
    for _ in range(POWER_MAXITER // 4):
        w = (h4 @ v[:, :, None])[:, :, 0]
        nw = np.linalg.norm(w, axis=-1)
        zero = nw == 0
        nw[zero] = 1.0
        v = w / nw[:, None]
        new = np.real(np.sum(np.conj(v) * (h @ v[:, :, None])[:, :, 0], axis=-1))
        new[zero] = 0.0
        active = ~((np.abs(new - lam) <= POWER_TOL * np.maximum(np.abs(new), 1e-300)) | zero)
        lam = new
        if not active.any():
            break
    converged = not active.any()
    if not converged:
        idx = np.nonzero(active)[0]
        logger.debug("power iteration unconverged on %d fibres; polishing", idx.size)
        lam[idx] = np.linalg.eigvalsh(h[idx])[:, -1]
    return np.sqrt(np.maximum(lam, 0.0)).reshape(shape), converged


def _fibre_norms(mats: list[np.ndarray], side: str = "col", method: str = "eigh") -> tuple[np.ndarray, bool]:
    """Norms of the stacked fibre operators ``[M_1; M_2; ...]`` or ``[M_1 M_2 ...]``."""
    if method not in ("eigh", "power"):
        raise ValueError(f"unknown norm method {method!r}")
    h = _gram(mats, side)
    return _eigh_norms(h) if method == "eigh" else _power_norms(h)


@lru_cache(maxsize=64)
def bloch_period(params: ManifoldParams, grid: Grid) -> tuple[int, int, int] | None:
    """``(L, K, J)`` with the p-step ``2 hbar (mu, nu)`` times L equal to ``(2 pi K, J)``.

    None when the fibre shifts are not grid-commensurate.
    """
    a = params.hbar * params.mu / grid.dx
    b = params.hbar * params.nu / grid.dy
    if abs(a - round(a)) > 1e-12 or abs(b - round(b)) > 1e-12:
        return None
    a, b = int(round(a)), int(round(b))
    la = grid.nx // math.gcd(2 * a, grid.nx)
    lb = grid.ny // math.gcd(2 * b, grid.ny)
    L = la * lb // math.gcd(la, lb)
    return L, 2 * L * a // grid.nx, 2 * L * b // grid.ny


@lru_cache(maxsize=64)
def orbit_representatives(params: ManifoldParams, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """One grid fibre per orbit of ``(x, y) -> (x + 2 hbar mu, y + 2 hbar nu)``.

    The fibre operator at the image point is the p-shift of the one at
    ``(x, y)`` up to a diagonal gauge, so both have the same norm and
    spectrum.  Only meaningful when ``bloch_period`` is not None.
    """
    a = round(params.hbar * params.mu / grid.dx)
    b = round(params.hbar * params.nu / grid.dy)
    seen = np.zeros((grid.nx, grid.ny), dtype=bool)
    ii, jj = [], []
    for i in range(grid.nx):
        for j in range(grid.ny):
            if seen[i, j]:
                continue
            ii.append(i)
            jj.append(j)
            k = 0
            while not seen[(i + 2 * a * k) % grid.nx, (j + 2 * b * k) % grid.ny]:
                seen[(i + 2 * a * k) % grid.nx, (j + 2 * b * k) % grid.ny] = True
                k += 1
    return np.array(ii), np.array(jj)


def bloch_coefficients(e: Element) -> dict[int, np.ndarray]:
    """Fourier coefficients ``C_m`` with ``M(kappa) = sum_m C_m exp(i m kappa)``.

    ``M(kappa)`` has shape ``(nx, ny, L, L)``: the fibre operator restricted to
    vectors with ``xi(p + L) = exp(i (kappa + theta_p)) xi(p)``.
    """
    per = bloch_period(e.params, e.grid)
    if per is None:
        raise ValueError("Bloch reduction needs grid-commensurate hbar*mu and hbar*nu")
    L, K, _ = per
    g, prm = e.grid, e.params
    y = g.y[None, :]

    def theta(p):
        return 2 * math.pi * prm.c * K * (p * y + prm.hbar * prm.nu * p * p)

    shifted = _Shifts(e)
    coeffs: dict[int, np.ndarray] = {}
    for p in range(L):
        for q in range(-g.p_max, g.p_max + 1):
            col = p - q
            s, m = col % L, col // L
            if m > 0:
                phase = sum(theta(s + j * L) for j in range(m))
            elif m < 0:
                phase = -sum(theta(s + j * L) for j in range(m, 0))
            else:
                phase = 0.0
            val = shifted(-(q - 2 * p))[g.index(q)] * np.exp(1j * phase)
            c = coeffs.setdefault(m, np.zeros((g.nx, g.ny, L, L), dtype=complex))
            c[:, :, p, s] += val
    return coeffs


def _bloch_eval(coeffs: dict[int, np.ndarray], kappa: np.ndarray) -> np.ndarray:
    """``M(kappa)``; ``kappa`` broadcasts against the fibre axes of the coefficients."""
    kappa = np.asarray(kappa, dtype=float)
    out = 0
    for m, c in coeffs.items():
        out = out + c * np.exp(1j * m * kappa)[..., None, None]
    return out


def _bloch_fibre_norms(
    coeffs: list[dict[int, np.ndarray]], side: str, method: str, n_kappa: int = N_KAPPA
) -> tuple[np.ndarray, bool]:
    """``sup_kappa`` of the stacked Bloch operator norm, per fibre in ``coeffs``.

    Coefficient arrays have shape ``(n_fibres, L, L)``.
    """
    if all(set(c) <= {0} for c in coeffs):
        return _fibre_norms([c.get(0, 0) for c in coeffs], side, method)

    def norms_at(cs, kappa):
        return _fibre_norms([_bloch_eval(c, kappa) for c in cs], side, method)

    # |M(kappa)| <= sum_m |C_m| entrywise bounds every fibre uniformly in kappa
    bound, ok = _fibre_norms(
        [sum(np.abs(v) for v in c.values()).astype(complex) for c in coeffs], side, method
    )
    # kappa samples double each stage; a fibre is dropped once its Lipschitz
    # envelope around the samples cannot reach the best value seen anywhere
    slope_all = np.sqrt(sum(
        sum(abs(m) * np.linalg.norm(v, axis=(-2, -1)) for m, v in c.items()) ** 2 for c in coeffs
    ))
    n = 4
    kap = 2 * math.pi * np.arange(n) / n
    vals, ok1 = norms_at(coeffs, kap[:, None])
    ok = ok and ok1
    best = vals.max(axis=0)
    arg = kap[np.argmax(vals, axis=0)]
    live = np.nonzero(bound >= best.max())
    while True:
        h = 2 * math.pi / n
        top = best.max()
        alive = best[live] + 0.5 * h * slope_all[live] >= top
        live = tuple(k[alive] for k in live)
        if n >= n_kappa or live[0].size == 0:
            break
        sub = [{m: v[live] for m, v in c.items()} for c in coeffs]
        new = 2 * math.pi * (np.arange(n) + 0.5) / n
        vals, ok1 = norms_at(sub, new[:, None])
        ok = ok and ok1
        cur = vals.max(axis=0)
        better = cur > best[live]
        best[live] = np.where(better, cur, best[live])
        arg[live] = np.where(better, new[np.argmax(vals, axis=0)], arg[live])
        n *= 2
    sampled = best
    cand = live
    if cand[0].size == 0:
        return sampled, ok
    k0 = arg[cand]
    sub = [{m: v[cand] for m, v in c.items()} for c in coeffs]
    lo, hi = k0 - h, k0 + h
    gr = (math.sqrt(5) - 1) / 2
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc, ok1 = norms_at(sub, c)
    fd, ok2 = norms_at(sub, d)
    ok = ok and ok1 and ok2
    for _ in range(60):
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - gr * (hi - lo), lo + gr * (hi - lo))
        fn, okn = norms_at(sub, new)
        ok = ok and okn
        c, d = np.where(left, new, d), np.where(left, c, new)
        fc, fd = np.where(left, fn, fd), np.where(left, fc, fn)
        if np.max(hi - lo) < KAPPA_TOL:
            break
    out = sampled.copy()
    out[cand] = np.maximum(out[cand], np.maximum(fc, fd))
    return out, ok


def stack_norm_report(
    elements: list[Element], side: str = "col", band: int | None = None, method: str = "eigh"
) -> NormResult:
    """Norm of the column ``[e_1; e_2; ...]`` or row ``[e_1 e_2 ...]`` operator.

    The column norm is ``sqrt(|sum e_i* e_i|)`` and the row norm is
    ``sqrt(|sum e_i e_i*|)``; a single element gives its operator norm.
    ``method="power"`` uses power iteration (tolerance ``POWER_TOL``, at most
    ``POWER_MAXITER`` steps) instead of a batched Hermitian eigensolve.
    """
    if side not in ("col", "row"):
        raise ValueError("side must be 'col' or 'row'")
    if not elements:
        raise ValueError("need at least one element")
    for other in elements[1:]:
        _check(elements[0], other)
    e = elements[0]
    if band is None and bloch_period(e.params, e.grid) is not None:
        ii, jj = orbit_representatives(e.params, e.grid)
        coeffs = [{m: v[ii, jj] for m, v in bloch_coefficients(x).items()} for x in elements]
        norms, ok = _bloch_fibre_norms(coeffs, side, method)
        return NormResult(float(np.max(norms)), ok, True)
    band = band if band is not None else 4 * e.grid.p_max + 8
    norms, ok = _fibre_norms([block_operator(x, band) for x in elements], side, method)
    return NormResult(float(np.max(norms)), ok, False)


def op_norm_report(e: Element, band: int | None = None, method: str = "eigh") -> NormResult:
    """Operator norm on the GNS space; see module docstring for the two regimes."""
    return stack_norm_report([e], "col", band, method)


def op_norm(e: Element, method: str = "eigh") -> float:
    return op_norm_report(e, method=method).value


def truncated_norm(e: Element) -> float:
    """Norm of the compression to states with ``|p| <= p_max``."""
    norms, _ = _fibre_norms([block_operator(e)])
    return float(np.max(norms))


def fibre_spectrum_min(e: Element) -> float:
    """Smallest eigenvalue over all fibres of a self-adjoint element.

    Uses the Bloch fibres (full l^2(Z) spectrum) when available.
    """
    per = bloch_period(e.params, e.grid)
    if per is None:
        mats = block_operator(e, 4 * e.grid.p_max + 8)
    else:
        ii, jj = orbit_representatives(e.params, e.grid)
        coeffs = {m: v[ii, jj] for m, v in bloch_coefficients(e).items()}
        kap = 2 * math.pi * np.arange(N_KAPPA) / N_KAPPA
        mats = _bloch_eval(coeffs, kap[:, None])
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    return float(np.min(np.linalg.eigvalsh(herm)))
