"""Fiberwise Fourier transform and Paley-Wiener observables.

Convention, per base point q with fiber Lebesgue measure c(q) d^n X::

    f(theta) = c(q) int d^nX       e^{-i theta.X} ft(X)
    ft(X)    =      int d^n theta  e^{+i theta.X} f(theta) / ((2 pi)^n c(q))

so every (2 pi)^n sits on the theta side. Observables are *specified* by their
fiber transform ``ft`` (compactly supported in X) and sampled on centred
uniform lattices; products and brackets are formed pointwise in theta and
transformed back.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * np.pi
TRUNCATION_AMPLITUDE = 1e-13
GAUSSIAN_TAIL = 1e-14
Q_STEP = 1e-3
DEFAULT_STEP = 0.05


class FourierError(ValueError):
    pass


class AliasingError(FourierError):
    pass


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class FiberGrid:
    """Centred uniform lattice X_k = (k - M/2) * step in each fiber direction."""

    step: tuple
    count: tuple

    def __post_init__(self):
        if len(self.step) != len(self.count):
            raise FourierError("step and count must have equal length")
        if any(m % 2 for m in self.count) or any(m < 4 for m in self.count):
            raise FourierError("lattice counts must be even and >= 4")
        if any(s <= 0 for s in self.step):
            raise FourierError("lattice steps must be positive")

    @classmethod
    def covering(cls, radius: float, step, n: int = 1, pad: float = 2.0) -> "FiberGrid":
        steps = tuple(np.broadcast_to(np.asarray(step, float), (n,)).tolist())
        counts = tuple(2 * int(np.ceil(pad * radius / s)) + 4 for s in steps)
        return cls(steps, counts)

    @property
    def n(self) -> int:
        return len(self.step)

    @property
    def shape(self) -> tuple:
        return tuple(self.count)

    @property
    def cell(self) -> float:
        return float(np.prod(self.step))

    def axis(self, i: int) -> np.ndarray:
        m = self.count[i]
        return (np.arange(m) - m // 2) * self.step[i]

    def dual_axis(self, i: int) -> np.ndarray:
        m = self.count[i]
        return (np.arange(m) - m // 2) * (TWO_PI / (m * self.step[i]))

    def points(self) -> np.ndarray:
        """Lattice points, shape (*count, n)."""
        return np.stack(np.meshgrid(*[self.axis(i) for i in range(self.n)], indexing="ij"), axis=-1)

    def dual_points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*[self.dual_axis(i) for i in range(self.n)], indexing="ij"), axis=-1)

    @property
    def dual_cell(self) -> float:
        return float(np.prod([TWO_PI / (m * s) for m, s in zip(self.count, self.step)]))

    def half_extent(self) -> np.ndarray:
        return np.array([(m // 2 - 1) * s for m, s in zip(self.count, self.step)])


def _fiber_axes(n):
    return tuple(range(-n, 0))


def _scale_shape(scale, n):
    s = np.asarray(scale, float)
    return s.reshape(s.shape + (1,) * n)


def check_support(ft: np.ndarray, grid: FiberGrid, tol: float = TRUNCATION_AMPLITUDE):
    """Reject samples whose support reaches the lattice boundary."""
    peak = np.max(np.abs(ft), initial=0.0)
    if peak == 0:
        return
    for ax in _fiber_axes(grid.n):
        edge = np.take(ft, [0, 1, -2, -1], axis=ax)
        if np.max(np.abs(edge)) > tol * max(peak, 1.0):
            raise AliasingError("fiber transform support touches the lattice boundary")


def fiber_fourier(ft, grid: FiberGrid, scale=1.0, method: str = "fft", check: bool = True):
    """f(theta) on the dual lattice from ft(X) samples (last n axes)."""
    ft = np.asarray(ft, dtype=complex)
    if check:
        check_support(ft, grid)
    axes = _fiber_axes(grid.n)
    if method == "fft":
        out = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(ft, axes=axes), axes=axes), axes=axes)
        out *= grid.cell
    elif method == "direct":
        out = ft
        for i, ax in enumerate(axes):
            kernel = np.exp(-1j * np.multiply.outer(grid.dual_axis(i), grid.axis(i)))
            out = np.moveaxis(np.tensordot(out, kernel, axes=([ax], [1])), -1, ax)
        out = out * grid.cell
    else:
        raise FourierError(f"unknown method {method!r}")
    return out * _scale_shape(scale, grid.n)


def fiber_inverse_fourier(f, grid: FiberGrid, scale=1.0, method: str = "fft", check: bool = False):
    """ft(X) on the lattice from f(theta) samples on the dual lattice."""
    f = np.asarray(f, dtype=complex)
    axes = _fiber_axes(grid.n)
    if method == "fft":
        out = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(f, axes=axes), axes=axes), axes=axes)
        out /= grid.cell
    elif method == "direct":
        out = f
        for i, ax in enumerate(axes):
            kernel = np.exp(1j * np.multiply.outer(grid.axis(i), grid.dual_axis(i)))
            out = np.moveaxis(np.tensordot(out, kernel, axes=([ax], [1])), -1, ax)
        out = out * (grid.dual_cell / TWO_PI**grid.n)
    else:
        raise FourierError(f"unknown method {method!r}")
    out = out / _scale_shape(scale, grid.n)
    if check:
        check_support(out, grid)
    return out


# ---------------------------------------------------------------------------
# observables


def bump(r):
    """exp(-1/(1 - r^2)) for r < 1, zero beyond."""
    r = np.asarray(r, float)
    inside = r < 1.0
    safe = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


def _norm(X):
    return np.sqrt(np.sum(np.asarray(X, float) ** 2, axis=-1))


def _bspline5_weights(u):
    """Weights of the six quintic B-splines overlapping fractional offset u in [0, 1)."""
    u2 = u * u
    u3, u4, u5 = u2 * u, u2 * u2, u2 * u2 * u
    return [
        (1 - u) ** 5 / 120,
        (26 - 50 * u + 20 * u2 + 20 * u3 - 20 * u4 + 5 * u5) / 120,
        (66 - 60 * u2 + 30 * u4 - 10 * u5) / 120,
        (26 + 50 * u + 20 * u2 - 20 * u3 - 20 * u4 + 10 * u5) / 120,
        (1 + 5 * u + 10 * u2 + 10 * u3 + 5 * u4 - 5 * u5) / 120,
        u5 / 120,
    ]


def spline_sample(lat: np.ndarray, rows: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Quintic spline interpolation of ``lat[row, ...]`` at fractional fiber indices.

    Interpolates only along the fiber axes (axis 0 indexes base points and is
    never mixed); the lattice is extended by zeros, matching
    ``ndimage.map_coordinates(..., order=5, mode="grid-constant")``.
    """
    pad = 12  # zero padding so the prefilter sees the constant extension
    coef = np.pad(lat, [(0, 0)] + [(pad, pad)] * (lat.ndim - 1))
    for ax in range(1, lat.ndim):
        coef = ndimage.spline_filter1d(coef.real, 5, axis=ax, mode="grid-constant") + 1j * (
            ndimage.spline_filter1d(coef.imag, 5, axis=ax, mode="grid-constant"))
    n = lat.ndim - 1
    idx = np.clip(idx + pad, 2, np.asarray(coef.shape[1:]) - 4)
    cell = np.floor(idx)
    weights = [_bspline5_weights(idx[:, ax] - cell[:, ax]) for ax in range(n)]
    strides = np.cumprod((coef.shape[1:] + (1,))[::-1])[::-1][1:]
    lin = rows * int(np.prod(coef.shape[1:])) + (cell.astype(np.int64) - 2) @ strides
    flat = coef.ravel()
    out = np.zeros(len(rows), dtype=complex)
    for offs in np.ndindex(*(6,) * n):
        w = weights[0][offs[0]]
        for ax in range(1, n):
            w = w * weights[ax][offs[ax]]
        out += w * flat[lin + int(np.dot(offs, strides))]
    return out


class Observable:
    """A classical observable f on the dual bundle, given through ft on the algebroid.

    Subclasses provide ``_lattice(grid, q, scale)`` returning samples of ft on
    a lattice for each base point in ``q`` together with the L1 mass dropped by
    truncation. Closed forms also provide pointwise ``ft``.
    """

    n: int = 1
    radius: float = 1.0
    label: str = "f"
    effectively_compact: bool = False
    truncation_radius: Optional[float] = None

    closed_form = False

    # -- sampling -------------------------------------------------------
    def ft(self, X, q):
        raise NotImplementedError(f"{type(self).__name__} has no pointwise form")

    def _lattice(self, grid: FiberGrid, q, scale):
        pts = grid.points()
        q = np.asarray(q, float)
        vals = self.ft(pts[None, ...], q.reshape((-1,) + (1,) * grid.n))
        return np.asarray(vals, dtype=complex), 0.0

    def ft_lattice(self, grid: FiberGrid, q, scale=None) -> np.ndarray:
        q = np.atleast_1d(np.asarray(q, float))
        scale = np.ones_like(q) if scale is None else np.broadcast_to(scale, q.shape)
        return self._lattice(grid, q, scale)[0]

    def ft_lattice_with_mass(self, grid: FiberGrid, q, scale=None):
        q = np.atleast_1d(np.asarray(q, float))
        scale = np.ones_like(q) if scale is None else np.broadcast_to(scale, q.shape)
        return self._lattice(grid, q, scale)

    def dual_lattice(self, grid: FiberGrid, q, scale=None) -> np.ndarray:
        q = np.atleast_1d(np.asarray(q, float))
        scale = np.ones_like(q) if scale is None else np.broadcast_to(scale, q.shape)
        return fiber_fourier(self._lattice(grid, q, scale)[0], grid, scale)

    def evaluate(self, X, q, step, scale_fn: Optional[Callable] = None, chunk: int = 2048):
        """ft at arbitrary points (X trailing axis n, q matching leading shape).

        Closed forms are evaluated exactly. Others are sampled on a lattice of
        the given step for each distinct q: lattice-aligned points are looked
        up, the rest interpolated by quintic splines along the fiber.
        """
        X = np.asarray(X, float)
        q = np.broadcast_to(np.asarray(q, float), X.shape[:-1])
        if self.closed_form:
            return np.asarray(self.ft(X, q), dtype=complex)
        inside = np.max(np.abs(X), axis=-1) < self.radius
        if not np.all(inside):
            out = np.zeros(X.shape[:-1], dtype=complex)
            if np.any(inside):
                out[inside] = self.evaluate(X[inside], q[inside], step, scale_fn, chunk)
            return out
        grid = FiberGrid.covering(self.radius, step, self.n, pad=1.0)
        flatX = X.reshape(-1, self.n)
        uq, inv = np.unique(q.ravel(), return_inverse=True)
        out = np.zeros(len(flatX), dtype=complex)
        idx = flatX / np.asarray(grid.step) + np.asarray(grid.count) // 2
        aligned = np.all(np.abs(idx - np.round(idx)) < 1e-7)
        for start in range(0, len(uq), chunk):
            sub = uq[start:start + chunk]
            scale = np.ones_like(sub) if scale_fn is None else scale_fn(sub)
            lat = self.ft_lattice(grid, sub, scale)
            sel = (inv >= start) & (inv < start + len(sub))
            rows = inv[sel] - start
            if aligned:
                ii = np.round(idx[sel]).astype(int)
                ok = np.all((ii >= 0) & (ii < np.asarray(grid.count)), axis=-1)
                vals = np.zeros(len(rows), dtype=complex)
                vals[ok] = lat[(rows[ok],) + tuple(ii[ok].T)]
            else:
                vals = spline_sample(lat, rows, idx[sel])
            out[sel] = vals
        outside = np.max(np.abs(flatX), axis=-1) >= self.radius
        out[outside] = 0.0
        return out.reshape(X.shape[:-1])

    # -- algebra ----------------------------------------------------------
    def conj(self) -> "Observable":
        return Conjugate(self)

    def __mul__(self, alpha):
        return Scaled(self, complex(alpha))

    __rmul__ = __mul__

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return Scaled(self, -1.0)


class ClosedForm(Observable):
    closed_form = True

    def __init__(self, func: Callable, radius: float, n: int = 1, label: str = "f",
                 real: Optional[bool] = None, effectively_compact: bool = False,
                 truncation_radius: Optional[float] = None):
        self.func = func
        self.radius = float(radius)
        self.n = n
        self.label = label
        self.real = real
        self.effectively_compact = effectively_compact
        self.truncation_radius = truncation_radius

    def ft(self, X, q):
        X = np.asarray(X, float)
        if self.n == 1 and X.shape[-1:] != (1,):
            X = X[..., None]
        vals = np.asarray(self.func(X, np.asarray(q, float)), dtype=complex)
        return np.where(np.max(np.abs(X), axis=-1) < self.radius, vals, 0.0)


def _q_profile(q_center, q_width, periodic, shape="bump"):
    if q_width is None:
        return lambda q: np.ones_like(np.asarray(q, float))
    if shape not in ("bump", "gauss"):
        raise FourierError(f"unknown base profile {shape!r}")
    if periodic:
        return lambda q: np.exp(np.cos(np.asarray(q, float) - q_center) / q_width)
    if shape == "gauss":
        return lambda q: np.exp(-0.5 * ((np.asarray(q, float) - q_center) / q_width) ** 2)
    return lambda q: bump(np.abs(np.asarray(q, float) - q_center) / q_width)


def bump_observable(radius=1.0, amplitude=1.0, momentum=0.0, n=1, q_center=0.0,
                    q_width=None, q_periodic=False, label="bump", q_shape="bump") -> ClosedForm:
    """ft(X, q) = A bump(|X|/r) exp(-i p0.X) a(q); f is real when A is real.

    The base profile a(q) is a compact bump of half-width ``q_width`` on
    lines and exp(cos(q - q0)/width) on circles; on lines ``q_shape="gauss"``
    selects exp(-(q - q0)^2 / (2 width^2)) instead.
    """
    p0 = np.broadcast_to(np.asarray(momentum, float), (n,)).copy()
    prof = _q_profile(q_center, q_width, q_periodic, q_shape)

    def func(X, q):
        phase = np.exp(-1j * (X @ p0))
        return amplitude * bump(_norm(X) / radius) * phase * prof(q)

    return ClosedForm(func, radius, n, label, real=np.isreal(amplitude))


def gaussian_observable(width=0.3, amplitude=1.0, momentum=0.0, n=1, q_center=0.0,
                        q_width=None, q_periodic=False, label="gauss", q_shape="bump") -> ClosedForm:
    """Gaussian ft truncated where it falls below the 1e-14 tail threshold."""
    cut = width * np.sqrt(2 * np.log(1.0 / GAUSSIAN_TAIL))
    p0 = np.broadcast_to(np.asarray(momentum, float), (n,)).copy()
    prof = _q_profile(q_center, q_width, q_periodic, q_shape)

    def func(X, q):
        r2 = np.sum(X * X, axis=-1)
        return amplitude * np.where(r2 < cut * cut, np.exp(-r2 / (2 * width**2)), 0.0) * np.exp(
            -1j * (X @ p0)) * prof(q)

    return ClosedForm(func, cut * (1 + 1e-9), n, label, real=np.isreal(amplitude),
                      effectively_compact=True, truncation_radius=cut)


def zero_observable(n=1) -> ClosedForm:
    return ClosedForm(lambda X, q: np.zeros(np.shape(X)[:-1]), 1.0, n, "0", real=True)


class Conjugate(Observable):
    """conj f, with ft_conj(X) = conj ft(-X)."""

    def __init__(self, base: Observable):
        self.base, self.n, self.radius = base, base.n, base.radius
        self.label = f"conj({base.label})"
        self.closed_form = base.closed_form
        self.effectively_compact = base.effectively_compact

    def ft(self, X, q):
        return np.conj(self.base.ft(-np.asarray(X, float), q))

    def _lattice(self, grid, q, scale):
        vals, mass = self.base._lattice(grid, q, scale)
        flipped = np.flip(vals, axis=_fiber_axes(grid.n))
        # centred lattice: X -> -X is a flip followed by a shift by one sample
        flipped = np.roll(flipped, 1, axis=_fiber_axes(grid.n))
        return np.conj(flipped), mass


class Scaled(Observable):
    def __init__(self, base: Observable, alpha: complex):
        self.base, self.alpha = base, alpha
        self.n, self.radius = base.n, base.radius
        self.label = f"{alpha:g}*{base.label}"
        self.closed_form = base.closed_form
        self.effectively_compact = base.effectively_compact

    def ft(self, X, q):
        return self.alpha * self.base.ft(X, q)

    def _lattice(self, grid, q, scale):
        vals, mass = self.base._lattice(grid, q, scale)
        return self.alpha * vals, abs(self.alpha) * mass


class LinearCombination(Observable):
    def __init__(self, terms: Sequence):
        self.terms = list(terms)
        self.n = self.terms[0][1].n
        self.radius = max(t.radius for _, t in self.terms)
        self.label = "+".join(t.label for _, t in self.terms)
        self.closed_form = all(t.closed_form for _, t in self.terms)
        self.effectively_compact = any(t.effectively_compact for _, t in self.terms)

    def ft(self, X, q):
        return sum(a * t.ft(X, q) for a, t in self.terms)

    def _lattice(self, grid, q, scale):
        out, mass = 0.0, 0.0
        for a, t in self.terms:
            v, m = t._lattice(grid, q, scale)
            out = out + a * v
            mass += abs(a) * m
        return out, mass


class SpectralObservable(Observable):
    """Observable built pointwise in theta from other observables.

    ``combine(q, scale, grid)`` returns f on the dual lattice of the padded
    grid; the result is transformed back, truncated below the representable
    amplitude and restricted to the declared radius.
    """

    closed_form = False

    def _dual_values(self, grid: FiberGrid, q, scale):
        raise NotImplementedError

    def _lattice(self, grid, q, scale):
        pad = FiberGrid(grid.step, tuple(max(m, c) for m, c in zip(
            grid.count, FiberGrid.covering(self.radius, grid.step, grid.n, pad=1.0).count)))
        f, mass_in = self._dual_values(pad, q, scale)
        ft = fiber_inverse_fourier(f, pad, scale)
        # restrict to the requested lattice (both centred, equal steps)
        sl = tuple(slice(pm // 2 - m // 2, pm // 2 - m // 2 + m) for pm, m in zip(pad.count, grid.count))
        dropped = 0.0
        inside = np.max(np.abs(pad.points()), axis=-1) < self.radius
        small = np.abs(ft) < TRUNCATION_AMPLITUDE
        drop = small | ~inside
        cell = pad.cell * _scale_shape(scale, grid.n)
        dropped = float(np.max(np.sum(np.abs(np.where(drop, ft, 0.0)) * cell, axis=_fiber_axes(grid.n)),
                               initial=0.0))
        ft = np.where(drop, 0.0, ft)
        return ft[(slice(None),) + sl], mass_in + dropped


class Product(SpectralObservable):
    """Pointwise product fg (a convolution of the fiber transforms)."""

    def __init__(self, f: Observable, g: Observable):
        if f.n != g.n:
            raise FourierError("fiber dimension mismatch")
        self.f, self.g, self.n = f, g, f.n
        self.radius = f.radius + g.radius
        self.label = f"({f.label})({g.label})"
        self.effectively_compact = f.effectively_compact or g.effectively_compact

    def _dual_values(self, grid, q, scale):
        a, ma = self.f._lattice(grid, q, scale)
        b, mb = self.g._lattice(grid, q, scale)
        return fiber_fourier(a, grid, scale, check=False) * fiber_fourier(b, grid, scale, check=False), ma + mb


class ThetaPolynomial(SpectralObservable):
    """f(theta) times a polynomial in theta of degree <= 2.

    ``coeffs`` maps exponent tuples to coefficients, e.g. {(0,): 1, (2,): -0.5}.
    The support of ft is unchanged (multiplication by theta differentiates ft).
    """

    def __init__(self, base: Observable, coeffs: dict):
        if any(sum(k) > 2 for k in coeffs):
            raise FourierError("polynomial degree must be <= 2")
        self.base, self.coeffs = base, dict(coeffs)
        self.n, self.radius = base.n, base.radius
        self.label = f"poly*{base.label}"
        self.effectively_compact = base.effectively_compact

    def _dual_values(self, grid, q, scale):
        v, m = self.base._lattice(grid, q, scale)
        f = fiber_fourier(v, grid, scale, check=False)
        th = grid.dual_points()
        poly = sum(c * np.prod(th ** np.asarray(k, float), axis=-1) for k, c in self.coeffs.items())
        return f * poly, m


def q_derivative(obs: Observable, grid: FiberGrid, q, scale_fn, step: float = Q_STEP):
    """d/dq of f(theta, q) on the dual lattice, centred 4th-order differences."""
    q = np.asarray(q, float)
    out = 0.0
    for k, w in ((2, -1.0), (1, 8.0), (-1, -8.0), (-2, 1.0)):
        qs = q + k * step
        out = out + w * obs.dual_lattice(grid, qs, scale_fn(qs))
    return out / (12.0 * step)


# ---------------------------------------------------------------------------
# sampled observables


@dataclass(frozen=True)
class PWObservable:
    """An observable sampled on a model's grids.

    ``ft_samples[iq, ...]`` holds ft on ``grid`` over base sample ``q[iq]`` and
    ``dual_samples`` the transform on the dual lattice. ``normalization`` records
    where the (2 pi)^n factors live.
    """

    model: object
    observable: Observable
    grid: FiberGrid
    q: np.ndarray
    ft_samples: np.ndarray
    dual_samples: np.ndarray
    selfadjoint: bool
    truncation_radius: Optional[float]
    trunc_mass: float
    normalization: str = "(2pi)^-n on theta side"

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.dual_samples), initial=0.0))


def _reality(ft, grid):
    """max |ft(-X) - conj ft(X)| on a centred lattice."""
    axes = _fiber_axes(grid.n)
    flipped = np.roll(np.flip(ft, axis=axes), 1, axis=axes)
    return float(np.max(np.abs(flipped - np.conj(ft)), initial=0.0))


def make_pw_observable(model, spec, step: float = DEFAULT_STEP, q=None,
                       grid: Optional[FiberGrid] = None, max_radius: Optional[float] = None) -> PWObservable:
    """Sample an observable on the model's dual grid.

    ``spec`` is an :class:`Observable` or a callable ft(X, q) (then
    ``max_radius`` must give its support radius). Gaussians must come through
    :func:`gaussian_observable`, which records the truncation radius.
    """
    if not isinstance(spec, Observable):
        if max_radius is None:
            raise FourierError("a bare callable needs max_radius (compact support)")
        spec = ClosedForm(spec, max_radius, model.fiber_dim)
    if spec.n != model.fiber_dim:
        raise FourierError("observable fiber dimension does not match the model")
    if not np.isfinite(spec.radius):
        raise FourierError("ft must be compactly supported")
    if grid is None:
        grid = FiberGrid.covering(spec.radius, step, spec.n)
    if q is None:
        q = model.base.samples
    q = np.atleast_1d(np.asarray(q, float))
    scale = model.fiber_scale(q)
    ft, mass = spec.ft_lattice_with_mass(grid, q, scale)
    dual = fiber_fourier(ft, grid, scale)
    selfadjoint = _reality(ft, grid) <= 1e-12 * max(1.0, float(np.max(np.abs(ft), initial=0.0)))
    return PWObservable(model, spec, grid, q, ft, dual, selfadjoint, spec.truncation_radius, mass)


def fine_grid(obs: Observable, theta_step: float, step: float = DEFAULT_STEP, max_count: int = 1 << 14) -> FiberGrid:
    """Lattice whose dual spacing is at most ``theta_step`` (zero padding in X)."""
    m = int(np.ceil(TWO_PI / (theta_step * step)))
    m = max(m + m % 2, 2 * int(np.ceil(obs.radius / step)) + 4)
    if m > max_count:
        raise FourierError("requested theta resolution needs too large a lattice")
    return FiberGrid((step,) * obs.n, (m,) * obs.n)


def classical_sup_norm(model, obs: Observable, theta_step: Optional[float] = None, step: float = DEFAULT_STEP,
                       refine: int = 41) -> float:
    """sup |f(theta, q)| on a fine dual lattice, with a local refinement in q."""
    if theta_step is None:
        theta_step = 0.02 if obs.n == 1 else 0.1
    grid = fine_grid(obs, theta_step, step)
    q = np.atleast_1d(np.asarray(model.base.samples, float))

    def sup_at(qs):
        vals = obs.dual_lattice(grid, qs, model.fiber_scale(qs))
        flat = np.abs(vals).reshape(len(qs), -1).max(axis=1)
        return flat

    best = sup_at(q)
    if len(q) == 1:
        return float(best[0])
    k = int(np.argmax(best))
    dq = float(np.min(np.diff(q))) if len(q) > 1 else 0.0
    local = q[k] + np.linspace(-dq, dq, refine)
    return float(max(best[k], np.max(sup_at(local))))
