"""The Heisenberg group action and the harmonic analysis built on it.

The flows act on coefficient functions by

    alpha_r(Phi)(x, y, p) = Phi(x - r, y, p)
    beta_s(Phi)(x, y, p)  = exp(i p s c x) Phi(x, y - s, p)
    gamma_t(Phi)(x, y, p) = exp(i p t) Phi(x, y, p)

and are implemented by the unitaries ``U_(r,s,t)`` on states.  Operator
Fourier coefficients, Fejer kernels and Cesaro means follow ``gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    COMMENSURATE_TOL,
    Element,
    StateVector,
    _translate_y,
    shift_x,
    shift_y,
    translate,
    translate_values,
)


@dataclass(frozen=True)
class GroupPoint:
    r: float = 0.0
    s: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("r", "s", "t"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"group coordinate {name} must be finite")
            object.__setattr__(self, name, v)


def _finite(v: float, name: str) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


def alpha(e: Element, r: float) -> Element:
    return shift_x(e, _finite(r, "r"))


def beta(e: Element, s: float) -> Element:
    s = _finite(s, "s")
    g = e.grid
    f = shift_y(e, s)
    phase = np.exp(1j * s * e.params.c * g.p[:, None, None] * g.x[None, :, None])
    return e.like(f.values * phase)


def gamma(e: Element, t: float) -> Element:
    t = _finite(t, "t")
    return e.like(e.values * np.exp(1j * e.grid.p * t)[:, None, None])


def act(e: Element, g: GroupPoint) -> Element:
    """Conjugation by ``U_(r,s,t)``, which is ``gamma_t alpha_r beta_s``.

    ``alpha`` and ``beta`` do not commute (``beta_s alpha_r = gamma_(c r s) alpha_r beta_s``),
    so the order matters when both ``r`` and ``s`` are nonzero.
    """
    return gamma(alpha(beta(e, g.s), g.r), g.t)


def unitary_L(xi: StateVector, g: GroupPoint) -> StateVector:
    """``(U xi)(x,y,p) = exp(i p (t + c s (x + hbar p mu - r))) xi(x - r, y - s, p)``."""
    prm, grid = xi.params, xi.grid
    moved = translate(xi, -g.r, -g.s).values
    p = grid.p[:, None, None].astype(float)
    x = grid.x[None, :, None]
    phase = np.exp(1j * p * (g.t + prm.c * g.s * (x + prm.hbar * p * prm.mu - g.r)))
    return xi.like(phase * moved)


def unitary_L_inverse(xi: StateVector, g: GroupPoint) -> StateVector:
    prm, grid = xi.params, xi.grid
    moved = translate(xi, g.r, g.s).values
    p = grid.p[:, None, None].astype(float)
    x = grid.x[None, :, None]
    phase = np.exp(-1j * p * (g.t + prm.c * g.s * (x + prm.hbar * p * prm.mu)))
    return xi.like(phase * moved)


# ---------------------------------------------------------------------------
# Fourier coefficients and Cesaro means


def _check_n(e: Element, n: int) -> int:
    n = int(n)
    if abs(n) > e.grid.p_max:
        raise ValueError(f"|n| = {abs(n)} exceeds p_max = {e.grid.p_max}")
    return n


def fourier_coeff(e: Element, n: int) -> Element:
    n = _check_n(e, n)
    vals = np.zeros_like(e.values)
    i = e.grid.index(n)
    vals[i] = e.values[i]
    return e.like(vals)


def fourier_coeff_quadrature(e: Element, n: int, nt: int) -> Element:
    """Uniform ``nt``-node rule for ``(1/2pi) int gamma_t(e) exp(-i n t) dt`` over ``[-pi, pi)``."""
    n = _check_n(e, n)
    if int(nt) < 1:
        raise ValueError("nt must be >= 1")
    ts = -math.pi + 2 * math.pi * np.arange(int(nt)) / int(nt)
    w = np.exp(1j * np.outer(ts, e.grid.p - n)).mean(axis=0)
    return e.like(e.values * w[:, None, None])


def fejer_kernel(N: int, t: float) -> float:
    if N < 0:
        raise ValueError("N must be >= 0")
    half = 0.5 * float(t)
    s = math.sin(half)
    if abs(s) < 1e-12:
        return float(N + 1)
    return (math.sin((N + 1) * half) / s) ** 2 / (N + 1)


def cesaro_weights(p: np.ndarray, N: int) -> np.ndarray:
    if N < 0:
        raise ValueError("N must be >= 0")
    return np.maximum(0.0, 1.0 - np.abs(p) / (N + 1))


def cesaro(e: Element, N: int) -> Element:
    return e.like(e.values * cesaro_weights(e.grid.p, N)[:, None, None])


# ---------------------------------------------------------------------------
# commutant probes on a real-line window


class _Window:
    """States on ``[x0, x0 + 2 pi n_per) x T x {|p| <= band}``, zero elsewhere.

    Operators are realised matrix-free on arrays of shape
    ``(2 band + 1, n_per * nx, ny)``.
    """

    def __init__(self, e: Element, n_per: int, first: int, band: int):
        self.e = e
        self.g = e.grid
        self.n_per = n_per
        self.first = first
        self.band = band
        self.x = (first * 2 * math.pi + self.g.dx * np.arange(n_per * self.g.nx))
        self._cache: dict[int, np.ndarray] = {}

    def coef(self, m: int) -> np.ndarray:
        """``Phi(x + hbar m mu, y + hbar m nu, q)`` on the window, shape ``(n_q, nwx, ny)``."""
        if m not in self._cache:
            e, g = self.e, self.g
            h = e.params.hbar
            a, b = h * m * e.params.mu, h * m * e.params.nu
            base = translate_values(e.values, g, e.params.c, g.p, a, b)
            per = self.first + np.arange(self.n_per)
            # covariant continuation: period j picks up exp(i c 2pi j q (y + b))
            ph = np.exp(
                2j * math.pi * e.params.c
                * per[None, :, None] * g.p[:, None, None] * (g.y + b)[None, None, :]
            )
            self._cache[m] = (base[:, None, :, :] * ph[:, :, None, :]).reshape(
                g.n_p, self.n_per * g.nx, g.ny
            )
        return self._cache[m]

    def apply(self, xi: np.ndarray) -> np.ndarray:
        P, B = self.g.p_max, self.band
        out = np.zeros_like(xi)
        for p in range(-B, B + 1):
            for q in range(-P, P + 1):
                if abs(p - q) > B:
                    continue
                out[p + B] += self.coef(-(q - 2 * p))[q + P] * xi[p - q + B]
        return out

    def shift_x(self, xi: np.ndarray, a: float) -> np.ndarray:
        """``xi(x + a)`` on the window, zero-filled."""
        q = a / self.g.dx
        m = round(q)
        if abs(q - m) < COMMENSURATE_TOL:
            out = np.zeros_like(xi)
            n = xi.shape[1]
            if abs(m) < n:
                if m >= 0:
                    out[:, : n - m] = xi[:, m:]
                else:
                    out[:, -m:] = xi[:, : n + m]
            return out
        k = 2 * math.pi * np.fft.fftfreq(xi.shape[1], self.g.dx)
        f = np.fft.fft(xi, axis=1) * np.exp(1j * k * a)[None, :, None]
        return np.fft.ifft(f, axis=1)


def commutant_residuals(
    e: Element,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray] | np.ndarray | None = None,
    k: float = 2 * math.pi,
    r: int = 1,
    probes: int = 10,
    seed: int = 0,
    corruption: float = 0.0,
) -> tuple[float, float, float]:
    """Largest relative residuals ``|[e, V_f] xi|``, ``|[e, W_k] xi|``, ``|[e, X_r] xi|``.

    Probe states live on a window of whole x-periods of the real line and
    are zero outside it; the three operators are

        (V_f xi)(x,y,p) = f(x,y) xi(x,y,p)
        (W_k xi)(x,y,p) = exp(-i c k (p^2 hbar nu + p y)) xi(x + k, y, p)
        (X_r xi)(x,y,p) = xi(x - 2 hbar r mu, y - 2 hbar r nu, p + r).

    ``f`` is a callable ``f(x, y)`` on the real line (broadcast over a
    meshgrid) or an array of window samples; default ``cos(x) + sin(2 pi y)``.
    ``corruption > 0`` adds random fibre noise supported on a single
    x-period, which no element can produce, as a negative control.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    km = k / (2 * math.pi)
    if abs(km - round(km)) > 1e-9:
        raise ValueError("k must be an integer multiple of 2*pi")
    km, r = int(round(km)), int(r)
    g, prm = e.grid, e.params
    n_per = abs(km) + 2
    band = 2 * g.p_max + abs(r)
    win = _Window(e, n_per, -(n_per // 2), band)
    nwx = n_per * g.nx
    X, Y = np.meshgrid(win.x, g.y, indexing="ij")
    if f is None:
        fv = np.cos(X) + np.sin(2 * math.pi * Y)
    elif callable(f):
        fv = np.broadcast_to(np.asarray(f(X, Y), dtype=complex), X.shape)
    else:
        fv = np.asarray(f, dtype=complex)
        if fv.shape != X.shape:
            raise ValueError(f"f samples need shape {X.shape}, got {fv.shape}")
    if not np.all(np.isfinite(fv)):
        raise ValueError("f samples must be finite")

    rng = np.random.default_rng(seed)
    ps = np.arange(-band, band + 1)
    noise = None
    if corruption > 0:
        size = (nwx, g.ny, 2 * band + 1, 2 * band + 1)
        noise = corruption * (rng.normal(size=size) + 1j * rng.normal(size=size))
        noise[g.nx:] = 0.0  # first period only

    def op(xi):
        out = win.apply(xi)
        if noise is not None:
            out = out + np.moveaxis(np.einsum("xyab,bxy->xya", noise, xi), -1, 0)
        return out

    def V(xi):
        return fv[None] * xi

    def W(xi):
        ph = np.exp(-1j * prm.c * k * (ps[:, None, None] ** 2 * prm.hbar * prm.nu + ps[:, None, None] * g.y))
        return ph * win.shift_x(xi, k)

    def Xr(xi):
        moved = win.shift_x(xi, -2 * prm.hbar * r * prm.mu)
        moved = _translate_y(moved, g, -2 * prm.hbar * r * prm.nu)
        out = np.zeros_like(xi)
        for p in ps:
            if abs(p + r) <= band:
                out[p + band] = moved[p + r + band]
        return out

    # probes live on |p| <= band - p_max - |r| so no image leaves the working band
    sup = band - g.p_max - abs(r)
    sl = slice(band - sup, band + sup + 1)
    res = [0.0, 0.0, 0.0]
    for _ in range(probes):
        xi = np.zeros((2 * band + 1, nwx, g.ny), dtype=complex)
        shape = xi[sl].shape
        xi[sl] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        nrm = np.linalg.norm(xi)
        for i, T in enumerate((V, W, Xr)):
            d = op(T(xi)) - T(op(xi))
            res[i] = max(res[i], float(np.linalg.norm(d) / nrm))
    return res[0], res[1], res[2]


# ---------------------------------------------------------------------------
# twisted convolution smoothing


def max_smoothing_index(e: Element) -> int:
    """Largest ``m`` whose bump still reaches a neighbouring grid node."""
    h = min(e.grid.dx, e.grid.dy)
    return math.ceil(1.0 / h) - 1


def twisted_smooth(e: Element, m: int) -> Element:
    """``Phi_m(x,y,n) = sum h_m(r,s) Phi(x - r, y - s, n) exp(i c n x s)`` on the grid.

    ``h_m`` is the product of two hats of half-width ``1/m``, sampled at
    grid offsets and renormalised to unit mass.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    top = max_smoothing_index(e)
    if m > top:
        raise ValueError(f"bump of half-width 1/{m} is below one grid cell; max admissible m is {top}")
    g, prm = e.grid, e.params
    ir = np.arange(-math.ceil(g.nx / 2), math.ceil(g.nx / 2) + 1)
    js = np.arange(-math.ceil(g.ny / 2), math.ceil(g.ny / 2) + 1)
    wr = np.maximum(0.0, 1.0 - m * np.abs(ir * g.dx))
    ws = np.maximum(0.0, 1.0 - m * np.abs(js * g.dy))
    ir, wr = ir[wr > 0], wr[wr > 0]
    js, ws = js[ws > 0], ws[ws > 0]
    total = wr.sum() * ws.sum()
    out = np.zeros_like(e.values)
    px = prm.c * g.p[:, None, None] * g.x[None, :, None]
    for i, a in zip(ir, wr):
        for j, b in zip(js, ws):
            r, s = i * g.dx, j * g.dy
            moved = translate_values(e.values, g, prm.c, g.p, -r, -s)
            out += (a * b / total) * moved * np.exp(1j * px * s)
    return e.like(out)


def dx_sup(e: Element, upsample: int = 4) -> np.ndarray:
    """Per-slice ``sup |dPhi/dx|`` on an ``upsample``-times finer x grid."""
    g, c = e.grid, e.params.c
    n = g.nx * upsample
    xf = 2 * math.pi * np.arange(n) / n
    out = np.empty(g.n_p)
    for k, p in enumerate(g.p):
        rate = c * p * g.y[None, :]
        psi = e.values[k] * np.exp(-1j * g.x[:, None] * rate)
        f = np.fft.fft(psi, axis=0)
        # zero-padded spectrum keeps the same (fftfreq) mode numbers
        big = np.zeros((n, g.ny), dtype=complex)
        modes = np.fft.fftfreq(g.nx, 1.0 / g.nx).astype(int)
        big[modes % n] = f
        kf = np.fft.fftfreq(n, 1.0 / n)
        fine = np.fft.ifft(big, axis=0) * upsample
        dfine = np.fft.ifft(1j * kf[:, None] * big, axis=0) * upsample
        d = np.exp(1j * xf[:, None] * rate) * (1j * rate * fine + dfine)
        out[k] = float(np.max(np.abs(d)))
    return out
