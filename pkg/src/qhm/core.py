"""Parameters, grids and sampled coefficient functions.

An element is stored by its samples ``Phi(x_i, y_j, p)`` on the fundamental
domain ``[0, 2pi) x [0, 1)`` for ``|p| <= p_max``.  Everything outside the
domain follows from the covariance rule

    Phi(x + 2pi k, y, p) = exp(i c 2pi k p y) Phi(x, y, p)

and 1-periodicity in ``y``.  Off-grid values come from trigonometric
interpolation: in ``y`` of ``Phi`` itself, in ``x`` of the periodic
representative ``Psi = exp(-i c p x y) Phi``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

COMMENSURATE_TOL = 1e-12


class FormatError(ValueError):
    """Malformed element/state document; the message names the field."""


@dataclass(frozen=True)
class ManifoldParams:
    c: int = 1
    hbar: float = 1.0
    mu: float = 2 * math.pi / 16
    nu: float = 1 / 16

    def __post_init__(self):
        if isinstance(self.c, bool) or int(self.c) != self.c or self.c < 1:
            raise ValueError(f"c must be a positive integer, got {self.c!r}")
        object.__setattr__(self, "c", int(self.c))
        for name in ("hbar", "mu", "nu"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "hbar": self.hbar, "mu": self.mu, "nu": self.nu}


@dataclass(frozen=True)
class Grid:
    nx: int = 16
    ny: int = 16
    p_max: int = 4

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 4 or v % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {v!r}")
        if int(self.p_max) != self.p_max or self.p_max < 0:
            raise ValueError(f"p_max must be a nonnegative integer, got {self.p_max!r}")

    @property
    def dx(self) -> float:
        return 2 * math.pi / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def n_p(self) -> int:
        return 2 * self.p_max + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_p, self.nx, self.ny)

    @property
    def dim(self) -> int:
        return self.n_p * self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(self.ny)

    @property
    def p(self) -> np.ndarray:
        return np.arange(-self.p_max, self.p_max + 1)

    @property
    def kx(self) -> np.ndarray:
        # angular frequencies on [0, 2pi); Nyquist kept at -nx/2
        return 2 * math.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def ky(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.ny, self.dy)

    def index(self, p: int) -> int:
        if abs(p) > self.p_max:
            raise IndexError(f"|p| = {abs(p)} exceeds p_max = {self.p_max}")
        return p + self.p_max

    def to_dict(self) -> dict[str, int]:
        return {"nx": self.nx, "ny": self.ny, "p_max": self.p_max}


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class _Sampled:
    params: ManifoldParams
    grid: Grid
    values: np.ndarray = field(repr=False)

    kind = "element"

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values has shape {vals.shape}, grid needs {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    def like(self, values: np.ndarray):
        return type(self)(self.params, self.grid, values)

    def compatible(self, other: _Sampled) -> None:
        if self.params != other.params or self.grid != other.grid:
            raise ValueError("operands differ in params or grid")

    def slice(self, p: int) -> np.ndarray:
        return self.values[self.grid.index(p)]

    def __add__(self, other):
        self.compatible(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self.compatible(other)
        return self.like(self.values - other.values)

    def __neg__(self):
        return self.like(-self.values)

    def __mul__(self, scalar):
        return self.like(complex(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.like(self.values / complex(scalar))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_dict(self) -> dict[str, Any]:
        flat = self.values.reshape(-1)
        data = np.empty(2 * flat.size)
        data[0::2] = flat.real
        data[1::2] = flat.imag
        return {
            "kind": self.kind,
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "data": data.tolist(),
        }


class Element(_Sampled):
    """Sampled coefficient function of an algebra element."""

    kind = "element"

    def twist(self) -> np.ndarray:
        return np.zeros(self.grid.n_p)


class StateVector(_Sampled):
    """Vector of the GNS space, sampled on the same grid as elements.

    States satisfy ``xi(x + 2pi, y, p) = exp(2pi i c (p y + hbar nu p^2)) xi``,
    the rule that makes them invariant under the ``W_k`` operators (it is the
    covariance of ``Phi xi_0``, the GNS image of an element).
    """

    kind = "state"

    def twist(self) -> np.ndarray:
        p = self.grid.p
        return self.params.hbar * self.params.nu * p.astype(float) ** 2

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def inner(self, other: StateVector) -> complex:
        """Inner product, linear in the first slot."""
        self.compatible(other)
        w = self.grid.dx * self.grid.dy / (2 * math.pi)
        return complex(np.vdot(other.values, self.values) * w)


# ---------------------------------------------------------------------------
# translation machinery


def _is_commensurate(shift: float, step: float) -> tuple[bool, int]:
    q = shift / step
    m = round(q)
    return abs(q - m) < COMMENSURATE_TOL, int(m)


def _translate_y(values: np.ndarray, grid: Grid, b: float) -> np.ndarray:
    """Samples of ``F(x_i, y_j + b)`` for 1-periodic ``F`` along the last axis."""
    if b == 0:
        return values
    ok, m = _is_commensurate(b, grid.dy)
    if ok:
        return np.roll(values, -m, axis=-1)
    f = np.fft.fft(values, axis=-1)
    f *= np.exp(1j * grid.ky * b)
    return np.fft.ifft(f, axis=-1)


def _translate_x(values: np.ndarray, grid: Grid, a: float, phase_rate: np.ndarray) -> np.ndarray:
    """Samples of ``F(x_i + a, .)`` where ``F exp(-i x phase_rate)`` is 2pi-periodic.

    ``phase_rate`` broadcasts against ``values`` with the x axis removed,
    i.e. shape ``(..., ny)``.
    """
    if a == 0:
        return values
    x = grid.x[:, None]
    rate = phase_rate[..., None, :]
    psi = values * np.exp(-1j * x * rate)
    ok, m = _is_commensurate(a, grid.dx)
    if ok:
        psi = np.roll(psi, -m, axis=-2)
    else:
        f = np.fft.fft(psi, axis=-2)
        f *= np.exp(1j * grid.kx * a)[:, None]
        psi = np.fft.ifft(f, axis=-2)
    return psi * np.exp(1j * (x + a) * rate)


def translate_values(
    values: np.ndarray,
    grid: Grid,
    c: int,
    pvals: np.ndarray,
    a: float,
    b: float,
    twist: np.ndarray | None = None,
) -> np.ndarray:
    """Samples of ``F(x_i + a, y_j + b, p)`` for stacked p-slices.

    ``values`` has shape ``(len(pvals), nx, ny)``.  ``twist`` adds a per-slice
    constant to ``p*y`` in the x-covariance phase (zero for elements).
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("translation amounts must be finite")
    pvals = np.asarray(pvals, dtype=float)
    tw = np.zeros_like(pvals) if twist is None else np.asarray(twist, dtype=float)
    out = _translate_y(values, grid, b)
    y_eff = grid.y + b
    rate = c * (pvals[:, None] * y_eff[None, :] + tw[:, None])
    return _translate_x(out, grid, a, rate)


def translate(obj: _Sampled, a: float, b: float) -> _Sampled:
    return obj.like(
        translate_values(obj.values, obj.grid, obj.params.c, obj.grid.p, a, b, obj.twist())
    )


def shift_x(obj: _Sampled, r: float) -> _Sampled:
    """Samples of ``(x, y, p) -> F(x - r, y, p)``."""
    return translate(obj, -float(r), 0.0)


def shift_y(obj: _Sampled, s: float) -> _Sampled:
    """Samples of ``(x, y, p) -> F(x, y - s, p)``."""
    return translate(obj, 0.0, -float(s))


def _trig_eval(samples: np.ndarray, k: np.ndarray, t: float) -> complex:
    # interpolant sum_k F_k exp(i k t) / n with the grid's frequency convention
    f = np.fft.fft(samples, axis=-1)
    return np.sum(f * np.exp(1j * k * t), axis=-1) / samples.shape[-1]


def covariant_sample(obj: _Sampled, x: float, y: float, p: int) -> complex:
    """Value of the sampled function at an arbitrary point ``(x, y, p)``."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("x and y must be finite")
    g = obj.grid
    if abs(p) > g.p_max:
        return 0j
    c = obj.params.c
    tw = float(obj.twist()[g.index(p)])
    k = math.floor(x / (2 * math.pi))
    x0 = x - 2 * math.pi * k
    wrap = np.exp(1j * c * 2 * math.pi * k * (p * y + tw))
    y0 = y - math.floor(y)
    sl = obj.slice(p)
    i = x0 / g.dx
    j = y0 / g.dy
    if abs(i - round(i)) < COMMENSURATE_TOL and abs(j - round(j)) < COMMENSURATE_TOL:
        val = sl[int(round(i)) % g.nx, int(round(j)) % g.ny]
        return complex(wrap * val)
    # interpolate in y at each x-node, then in x through the periodic representative
    col = _trig_eval(sl, g.ky, y0)
    rate = c * (p * y0 + tw)
    psi = col * np.exp(-1j * g.x * rate)
    val = _trig_eval(psi, g.kx, x0) * np.exp(1j * x0 * rate)
    return complex(wrap * val)


# ---------------------------------------------------------------------------
# spectral derivatives


def dx_values(values: np.ndarray, grid: Grid, c: int, pvals: np.ndarray, twist=None) -> np.ndarray:
    """Spectral ``dF/dx`` of stacked covariant slices."""
    pvals = np.asarray(pvals, dtype=float)
    tw = np.zeros_like(pvals) if twist is None else np.asarray(twist, dtype=float)
    rate = c * (pvals[:, None] * grid.y[None, :] + tw[:, None])[:, None, :]
    x = grid.x[:, None]
    psi = values * np.exp(-1j * x * rate)
    dpsi = np.fft.ifft(1j * grid.kx[:, None] * np.fft.fft(psi, axis=-2), axis=-2)
    return np.exp(1j * x * rate) * (1j * rate * psi + dpsi)


def dy_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral ``dF/dy`` (F is 1-periodic in y)."""
    return np.fft.ifft(1j * grid.ky * np.fft.fft(values, axis=-1), axis=-1)


# ---------------------------------------------------------------------------
# constructors


def zero_element(params: ManifoldParams, grid: Grid) -> Element:
    return Element(params, grid, np.zeros(grid.shape, dtype=complex))


def single_slice(params: ManifoldParams, grid: Grid, p: int, samples: np.ndarray) -> Element:
    vals = np.zeros(grid.shape, dtype=complex)
    vals[grid.index(p)] = samples
    return Element(params, grid, vals)


def _zak_slice(grid: Grid, cp: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth covariant section of degree ``cp`` built from Gaussians.

    Phi(x, y) = sum_rho sum_j g_rho(x - 2pi j) exp(2pi i (rho + cp j) y).
    Each g_rho is a (degree <= 1) Hermite-Gaussian placed so that the y-modes
    it feeds stay inside the grid band and its spectrum sits mid-band in x.
    """
    n = abs(cp)
    m_lo, m_hi = -(grid.ny // 2), grid.ny // 2 - 1
    x = grid.x[:, None]
    y = grid.y[None, :]
    out = np.zeros((grid.nx, grid.ny), dtype=complex)
    # x-spectrum of the periodic representative at row y peaks at omega0 - cp*y;
    # omega0 = -1/2 centres both the static rows and rows after a unit beta-flow
    omega0 = -0.5
    kx_room = max(grid.nx / 2 - 0.5 - n, 1.0)
    for rho in range(n):
        js = [j for j in range(-4 * grid.ny, 4 * grid.ny + 1) if m_lo <= rho + cp * j <= m_hi]
        j_lo, j_hi = min(js), max(js)
        # u = x - 2pi j covers [-2pi j_hi, 2pi (1 - j_lo)) for x in [0, 2pi)
        u_lo, u_hi = -2 * math.pi * j_hi, 2 * math.pi * (1 - j_lo)
        half = 0.5 * (u_hi - u_lo)
        u0 = 0.5 * (u_hi + u_lo)
        sigma = math.sqrt(half / kx_room)
        coef = rng.normal(size=2) + 1j * rng.normal(size=2)
        coef[1] *= 0.5 if n < 4 else 0.0
        for j in range(j_lo - 2, j_hi + 3):
            u = x - 2 * math.pi * j
            z = (u - u0) / sigma
            g = (coef[0] + coef[1] * z) * np.exp(-0.5 * z * z + 1j * omega0 * u)
            out += g * np.exp(2j * math.pi * (rho + cp * j) * y)
    return out


def random_element(
    params: ManifoldParams,
    grid: Grid,
    seed: int,
    p_decay: float = 1.0,
    support: int | None = None,
) -> Element:
    """Deterministic smooth test element.

    The p = 0 slice is a trigonometric polynomial with harmonics below nx/4,
    ny/4; the other slices are Gaussian-built covariant sections.  Each
    slice is normalised to sup 1 and scaled by ``exp(-p_decay |p|)``.
    ``support`` restricts the nonzero slices to ``|p| <= support``.
    """
    if not p_decay > 0:
        raise ValueError("p_decay must be positive")
    rng = np.random.default_rng(seed)
    vals = np.zeros(grid.shape, dtype=complex)
    # |k| < n/4 keeps products of two slices below the Nyquist mode
    hx, hy = grid.nx // 4 - 1, grid.ny // 4 - 1
    ax = np.arange(-hx, hx + 1)
    by = np.arange(-hy, hy + 1)
    lim = grid.p_max if support is None else min(support, grid.p_max)
    for p in grid.p:
        if abs(p) > lim:
            continue
        cp = params.c * int(p)
        if cp == 0:
            coef = rng.normal(size=(ax.size, by.size)) + 1j * rng.normal(size=(ax.size, by.size))
            coef /= 1.0 + ax[:, None] ** 2 + by[None, :] ** 2
            sl = np.einsum(
                "ab,xa,yb->xy",
                coef,
                np.exp(1j * np.outer(grid.x, ax)),
                np.exp(2j * math.pi * np.outer(grid.y, by)),
            )
        else:
            sl = _zak_slice(grid, cp, rng)
        sl = sl / np.max(np.abs(sl)) * math.exp(-p_decay * abs(p))
        vals[grid.index(int(p))] = sl
    return Element(params, grid, vals)


def random_state(
    params: ManifoldParams, grid: Grid, seed: int, band: int | None = None
) -> StateVector:
    """Random state whose x-periodic representative has at most ``band`` harmonics."""
    rng = np.random.default_rng(seed)
    band = grid.nx // 8 if band is None else band
    ax = np.arange(-band, band + 1)
    x = grid.x
    shape = (grid.n_p, ax.size, grid.ny)
    coef = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    psi = np.einsum("pay,xa->pxy", coef, np.exp(1j * np.outer(x, ax)))
    tw = params.hbar * params.nu * grid.p.astype(float) ** 2
    rate = params.c * (grid.p[:, None] * grid.y[None, :] + tw[:, None])[:, None, :]
    vals = psi * np.exp(1j * x[:, None] * rate)
    return StateVector(params, grid, vals / math.sqrt(vals.size))


# ---------------------------------------------------------------------------
# JSON format


def _require(doc: dict, key: str, kind: type | tuple) -> Any:
    if key not in doc:
        raise FormatError(f"missing field '{key}'")
    v = doc[key]
    if not isinstance(v, kind) or isinstance(v, bool):
        raise FormatError(f"field '{key}' has wrong type {type(v).__name__}")
    return v


def from_dict(doc: Any) -> Element | StateVector:
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    kind = _require(doc, "kind", str)
    if kind not in ("element", "state"):
        raise FormatError(f"field 'kind' must be 'element' or 'state', got {kind!r}")
    pd = _require(doc, "params", dict)
    gd = _require(doc, "grid", dict)
    try:
        params = ManifoldParams(
            c=_require(pd, "c", int),
            hbar=_require(pd, "hbar", (int, float)),
            mu=_require(pd, "mu", (int, float)),
            nu=_require(pd, "nu", (int, float)),
        )
    except FormatError as exc:
        raise FormatError(f"params: {exc}") from None
    except ValueError as exc:
        raise FormatError(f"params: {exc}") from None
    try:
        grid = Grid(_require(gd, "nx", int), _require(gd, "ny", int), _require(gd, "p_max", int))
    except FormatError as exc:
        raise FormatError(f"grid: {exc}") from None
    except ValueError as exc:
        raise FormatError(f"grid: {exc}") from None
    data = _require(doc, "data", list)
    if len(data) != 2 * grid.dim:
        raise FormatError(f"field 'data' has length {len(data)}, expected {2 * grid.dim}")
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("field 'data' must contain only numbers") from None
    if not np.all(np.isfinite(arr)):
        raise FormatError("field 'data' contains non-finite numbers")
    vals = (arr[0::2] + 1j * arr[1::2]).reshape(grid.shape)
    cls = Element if kind == "element" else StateVector
    return cls(params, grid, vals)


def dumps(obj: _Sampled) -> str:
    return json.dumps(obj.to_dict())


def loads(text: str) -> Element | StateVector:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return from_dict(doc)
