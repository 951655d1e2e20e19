"""Periodic sampling grids, E-valued grid functions and their spectral engine.

Functions on R^n are replaced by their T-periodic extensions sampled at
``x_k = -T/2 + k h`` with ``h = T/N``.  Fourier coefficients use the
continuous normalization

    f^(xi) ~ (2 pi)^(-n/2) h^n sum_k f(x_k) exp(-i x_k . xi),

on the lattice ``xi in (2 pi / T) Z^n``, so that multipliers act exactly as
they do on the whole space.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from ._supkernel import block_sup
from .errors import InvalidArgument, InvalidMultiplier
from .value_space import ValueSpace


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` samples per axis on ``[-T/2, T/2)^n``."""

    n: int
    N: int
    T: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise InvalidArgument(f"spatial dimension must be 1 or 2, got {self.n}")
        N = int(self.N)
        if N != self.N or N < 16 or N & (N - 1):
            raise InvalidArgument(f"N must be a power of two >= 16, got {self.N}")
        if not (self.T > 0) or not np.isfinite(self.T):
            raise InvalidArgument(f"period must be positive, got {self.T}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "T", float(self.T))

    @property
    def h(self):
        return self.T / self.N

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def cell_volume(self):
        return self.h ** self.n

    @cached_property
    def axis(self):
        return -self.T / 2 + self.h * np.arange(self.N)

    @cached_property
    def points(self):
        """Sample coordinates, shape ``shape + (n,)``."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def wavenumbers(self):
        return 2 * np.pi * sfft.fftfreq(self.N, d=self.h)

    @cached_property
    def xi(self):
        """Lattice frequencies in FFT order, shape ``shape + (n,)``."""
        mesh = np.meshgrid(*([self.wavenumbers] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def abs_xi(self):
        return np.sqrt(np.sum(self.xi ** 2, axis=-1))

    @property
    def nyquist(self):
        """Largest frequency per axis, ``pi N / T``."""
        return np.pi * self.N / self.T

    @cached_property
    def _phase(self):
        # exp(i T xi / 2) = (-1)^l per axis, from the grid origin at -T/2
        signs = (-1.0) ** np.round(sfft.fftfreq(self.N) * self.N)
        out = signs
        for _ in range(self.n - 1):
            out = np.multiply.outer(out, signs)
        return out

    @property
    def _forward_scale(self):
        return (2 * np.pi) ** (-self.n / 2) * self.h ** self.n

    def min_image(self, d):
        """Wrap index offsets into ``[-N/2, N/2)``."""
        return (np.asarray(d) + self.N // 2) % self.N - self.N // 2

    def min_image_points(self, x):
        """Wrap coordinate differences into ``[-T/2, T/2)``."""
        return (np.asarray(x) + self.T / 2) % self.T - self.T / 2

    def to_dict(self):
        return {"n": self.n, "N": self.N, "T": self.T}


class Multiplier:
    """A Fourier multiplier ``xi -> m(xi)``.

    ``evaluator`` receives an array of frequencies of shape ``(..., n)`` and
    returns the symbol values of shape ``(...)``.
    """

    def __init__(self, evaluator, label="m"):
        self.evaluator = evaluator
        self.label = label

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 0:
            xi = xi.reshape(1)
        return np.asarray(self.evaluator(xi))

    def on_lattice(self, grid):
        vals = np.asarray(self.evaluator(grid.xi), dtype=complex)
        vals = np.broadcast_to(vals, grid.shape)
        if not np.all(np.isfinite(vals)):
            raise InvalidMultiplier(f"multiplier {self.label!r} is not finite on the lattice")
        return vals

    def dilate(self, factor, label=None):
        """The multiplier ``xi -> m(factor * xi)``."""
        ev = self.evaluator
        return Multiplier(lambda xi: ev(factor * np.asarray(xi)),
                          label or f"{self.label}({factor:g}*xi)")

    def __mul__(self, other):
        a, b = self.evaluator, other.evaluator
        return Multiplier(lambda xi: a(xi) * b(xi), f"{self.label}*{other.label}")

    def __repr__(self):
        return f"Multiplier({self.label!r})"


def radial(profile, label):
    """Multiplier depending only on ``|xi|``."""
    return Multiplier(lambda xi: profile(np.sqrt(np.sum(np.asarray(xi) ** 2, axis=-1))), label)


class GridFunction:
    """Samples of a function ``torus -> E`` with a lazily computed spectrum.

    ``values`` has shape ``grid.shape + (space.dim,)`` and is read-only.
    """

    __slots__ = ("grid", "space", "values", "_coefficients", "memo")

    def __init__(self, grid, values, space=None):
        values = np.asarray(values, dtype=complex)
        if values.shape == grid.shape:
            values = values[..., None]
        if space is None:
            space = ValueSpace(values.shape[-1])
        if values.shape != grid.shape + (space.dim,):
            raise InvalidArgument(
                f"values of shape {values.shape} do not match grid {grid.shape} "
                f"and dimension {space.dim}")
        values = np.array(values, copy=True)
        values.setflags(write=False)
        self.grid = grid
        self.space = space
        self.values = values
        self._coefficients = None
        self.memo = {}

    @classmethod
    def from_function(cls, grid, func, space=None):
        """Sample ``func(x)`` where ``x`` has shape ``(..., n)``."""
        return cls(grid, func(grid.points), space)

    @classmethod
    def zeros(cls, grid, space=None):
        space = space or ValueSpace(1)
        return cls(grid, np.zeros(grid.shape + (space.dim,)), space)

    @property
    def coefficients(self):
        """Fourier coefficients, shape ``grid.shape + (d,)``, FFT ordered."""
        if self._coefficients is None:
            g = self.grid
            axes = tuple(range(g.n))
            c = sfft.fftn(self.values, axes=axes)
            c *= (g._forward_scale * g._phase)[..., None]
            c.setflags(write=False)
            self._coefficients = c
        return self._coefficients

    def norms(self):
        """Pointwise E-norms, shape ``grid.shape``."""
        return self.space.norms(self.values)

    def _check_compatible(self, other):
        if self.grid != other.grid or self.space != other.space:
            raise InvalidArgument("grid functions live on different grids or value spaces")

    def __add__(self, other):
        self._check_compatible(other)
        return GridFunction(self.grid, self.values + other.values, self.space)

    def __sub__(self, other):
        self._check_compatible(other)
        return GridFunction(self.grid, self.values - other.values, self.space)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * complex(c), self.space)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, N={self.grid.N}, T={self.grid.T}, d={self.space.dim})"


def transform_forward(f):
    """Populate and return ``f`` with its Fourier coefficients."""
    f.coefficients
    return f


def inverse_transform(grid, coefficients, space=None):
    """Grid function with the given Fourier coefficients."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape == grid.shape:
        c = c[..., None]
    axes = tuple(range(grid.n))
    vals = sfft.ifftn(c * (grid._phase / grid._forward_scale)[..., None], axes=axes)
    return GridFunction(grid, vals, space)


def apply_multiplier(f, m):
    """``(m f^)`` transformed back; ``m`` is a Multiplier or lattice array."""
    if isinstance(m, Multiplier):
        vals = m.on_lattice(f.grid)
    else:
        vals = np.asarray(m, dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise InvalidMultiplier("multiplier values are not finite")
    return inverse_transform(f.grid, f.coefficients * vals[..., None], f.space)


def lp_norm_values(mag, grid, p):
    """L_p quasi-norm of a nonnegative sampled function by Riemann sum."""
    if not (p > 0):
        raise InvalidArgument(f"p must be positive, got {p}")
    mag = np.asarray(mag, dtype=float)
    top = mag.max() if mag.size else 0.0
    if np.isinf(p):
        return float(top)
    if top == 0:
        return 0.0
    return float(top * (grid.cell_volume * np.sum((mag / top) ** p)) ** (1.0 / p))


def lp_norm(f, p):
    """``|| ||f(.)|E|| | L_p ||`` over one period."""
    return lp_norm_values(f.norms(), f.grid, p)


def convolve(f, g):
    """``(g * f)(x) = (2 pi)^(-n/2) int g(x-y) f(y) dy`` on the torus.

    ``g`` must be scalar valued; the transform of the result is ``g^ f^``.
    """
    if f.grid != g.grid:
        raise InvalidArgument("convolution requires a common grid")
    if g.space.dim != 1:
        raise InvalidArgument("the convolution kernel must be scalar valued")
    return apply_multiplier(f, g.coefficients[..., 0])


def _offset_norms(grid):
    """Euclidean lengths of the minimal-image index offsets, shape ``grid.shape``."""
    d = grid.min_image(np.arange(grid.N)).astype(float)
    sq = d ** 2
    out = sq
    for _ in range(grid.n - 1):
        out = np.add.outer(out, sq)
    return np.sqrt(out)


def hl_radii(grid):
    """The dyadic radii ``h, 2h, ..., T/2`` used by the maximal function."""
    k = int(np.log2(grid.N // 2))
    return grid.h * 2.0 ** np.arange(k + 1)


def _ball_max(A, grid, w):
    """``max_{|delta| <= w} A(x + delta)`` over minimal-image index offsets."""
    N = grid.N
    if grid.n == 1:
        size = min(2 * w + 1, N)
        return ndimage.maximum_filter1d(A, size=size, mode="wrap")
    out = np.full_like(A, -np.inf)
    rows = {}
    for d1 in range(-N // 2, N // 2):
        if abs(d1) > w:
            continue
        w2 = int(np.floor(np.sqrt(w * w - d1 * d1) + 1e-12))
        if w2 not in rows:
            rows[w2] = ndimage.maximum_filter1d(A, size=min(2 * w2 + 1, N), axis=1, mode="wrap")
        np.maximum(out, np.roll(rows[w2], -d1, axis=0), out=out)
    return out


def hardy_littlewood_max(f):
    """Discrete Hardy-Littlewood maximal function of ``||f(.)|E||``.

    The supremum runs over closed balls ``B_r(y)`` that contain ``x``, with
    ``y`` a grid point and ``r`` in the dyadic set ``{h, 2h, ..., T/2}``;
    averages are means over the grid points of the ball.  The point value
    itself (the limit ``r -> 0``) is included.
    """
    grid = f.grid
    mag = f.norms()
    out = mag.copy()
    lengths = _offset_norms(grid)
    spec = sfft.rfftn(mag)
    for r in hl_radii(grid):
        w = int(round(r / grid.h))
        ind = (lengths <= w + 1e-9).astype(float)
        avg = sfft.irfftn(spec * sfft.rfftn(ind), s=grid.shape) / ind.sum()
        np.maximum(out, _ball_max(avg, grid, w), out=out)
    return GridFunction(grid, out)


def weighted_sup(mag, grid, scale, a):
    """``sup_y mag(x - y) / (1 + scale |y|)^a`` over grid offsets ``y``.

    The supremum is exact over all minimal-image lattice offsets; a block
    branch-and-bound skips source blocks that cannot raise the value.
    """
    if not (a > 0):
        raise InvalidArgument(f"the maximal-function exponent must be positive, got {a}")
    mag = np.ascontiguousarray(mag, dtype=float).reshape(-1)
    N, n = grid.N, grid.n
    if n == 1:
        dist = np.arange(N // 2 + 1, dtype=float)
    else:
        dist = np.sqrt(np.arange(2 * (N // 2) ** 2 + 1, dtype=float))
    wtab = (1.0 + scale * grid.h * dist) ** (-float(a))
    b = min(32 if n == 1 else 4, N // 4)
    out = block_sup(mag, N, n, b, wtab)
    return out.reshape(grid.shape)


def peetre_maximal(f, kernel, j, a):
    """Peetre maximal function ``(psi_j^* f)_a`` on the grid.

    ``kernel`` is the symbol ``psi``; the level-``j`` function is
    ``(psi(2^-j .) f^)``, and the supremum over ``y`` is weighted by
    ``(1 + 2^j |y|)^-a``.
    """
    if not (a > 0):
        raise InvalidArgument(f"the maximal-function exponent must be positive, got {a}")
    if int(j) != j or j < 0:
        raise InvalidArgument(f"level must be a nonnegative integer, got {j}")
    F = apply_multiplier(f, kernel.dilate(2.0 ** (-j)))
    return GridFunction(f.grid, weighted_sup(F.norms(), f.grid, 2.0 ** j, a))


def resample(f, grid):
    """Trigonometric interpolation of ``f`` onto ``grid`` (same period and dimension).

    Coefficients on the common lattice are kept and the rest set to zero;
    the Nyquist mode of the coarser grid is dropped.
    """
    g = f.grid
    if grid.n != g.n or grid.T != g.T:
        raise InvalidArgument("resampling requires the same dimension and period")
    N0, N1 = g.N, grid.N
    Nc = min(N0, N1)
    k = np.arange(-Nc // 2 + 1, Nc // 2)
    src, dst = k % N0, k % N1
    c = np.zeros(grid.shape + (f.space.dim,), dtype=complex)
    c[np.ix_(*([dst] * grid.n))] = f.coefficients[np.ix_(*([src] * g.n))]
    return inverse_transform(grid, c, f.space)
