"""Analysing families: dyadic resolution of unity, local means, Poisson
multipliers, the partition window and quark profiles."""

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidArgument, ResolutionTooSmall
from .grid import GridFunction, Multiplier, apply_multiplier, radial


# ---------------------------------------------------------------------------
# smooth step

@lru_cache(maxsize=None)
def _logistic_polys(k):
    """Coefficients of the polynomials p_j with S^(j)(z) = p_j(S(z)), j <= k,
    for S(z) = 1 / (1 + e^z)."""
    polys = [np.array([0.0, 1.0])]
    dS = np.array([0.0, -1.0, 1.0])  # S' = -S (1 - S)
    for _ in range(k):
        polys.append(P.polymul(P.polyder(polys[-1]), dS))
    return tuple(polys)


def _step_left(u, order):
    """Derivative of order ``order`` of the step for ``0 < u <= 1/2``."""
    g = 1.0 / u - 1.0 / (1.0 - u)
    live = g < 700
    out = np.zeros(u.shape)
    u, g = u[live], g[live]
    S = 1.0 / (1.0 + np.exp(g))
    if order == 0:
        out[live] = S
        return out
    dg = [None] + [(-1) ** i * factorial(i) / u ** (i + 1) - factorial(i) / (1 - u) ** (i + 1)
                   for i in range(1, order + 1)]
    # partial Bell polynomials by the standard recurrence
    B = {(0, 0): np.ones_like(u)}
    for k in range(1, order + 1):
        B[(k, 0)] = np.zeros_like(u)
        for j in range(1, k + 1):
            acc = np.zeros_like(u)
            for i in range(1, k - j + 2):
                acc = acc + comb(k - 1, i - 1) * dg[i] * B[(k - i, j - 1)]
            B[(k, j)] = acc
    polys = _logistic_polys(order)
    out[live] = sum(P.polyval(S, polys[j]) * B[(order, j)] for j in range(1, order + 1))
    return out


def smooth_step(u, order=0):
    """C^infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``, and its derivatives.

    Uses ``H(u) = 1 / (1 + exp(1/u - 1/(1-u)))`` on ``(0, 1)``; derivatives
    follow from Faa di Bruno's formula with the logistic derivative
    polynomials.  The right half is obtained from ``H(u) = 1 - H(1 - u)``
    to avoid cancellation.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    if order == 0:
        out[u >= 1] = 1.0
    left = (u > 0) & (u <= 0.5)
    right = (u > 0.5) & (u < 1)
    out[left] = _step_left(u[left], order)
    mirrored = _step_left(1.0 - u[right], order)
    out[right] = 1.0 - mirrored if order == 0 else (-1) ** (order + 1) * mirrored
    return out


def bump_radial(r):
    """``rho``: 1 for ``r <= 1``, 0 for ``r >= 2``, smooth in between."""
    # the step is antisymmetric about 1/2, so this avoids cancellation near r = 2
    return smooth_step(2.0 - np.asarray(r, dtype=float))


def rho_multiplier():
    return radial(bump_radial, "rho")


BUMP_METADATA = {
    "step": "1/(1+exp(1/u-1/(1-u))) on (0,1)",
    "rho": "1 - step(|xi|-1)",
    "local_means_profile": "exp(-1/(1-x^2)) tensorised, unit mass",
}


# ---------------------------------------------------------------------------
# dyadic resolution of unity

def _phi_evaluator(j):
    if j == 0:
        return lambda xi: bump_radial(np.sqrt(np.sum(xi ** 2, axis=-1)))

    def ev(xi):
        r = np.sqrt(np.sum(np.asarray(xi) ** 2, axis=-1))
        return bump_radial(2.0 ** -j * r) - bump_radial(2.0 ** (1 - j) * r)
    return ev


@dataclass(frozen=True, eq=False)
class DyadicSystem:
    """Multipliers ``phi_0 = rho`` and ``phi_j = rho(2^-j .) - rho(2^(1-j) .)``."""

    grid: object
    J_max: int
    phi: tuple = field(repr=False)

    @property
    def phi0(self):
        return self.phi[0]

    def lattice(self, j):
        key = ("phi", j)
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = np.real(self.phi[j].on_lattice(self.grid))
        return cache[key]

    def coverage(self):
        """``sum_j phi_j`` on the lattice."""
        return sum(self.lattice(j) for j in range(self.J_max + 1))

    def metadata(self):
        return {"J_max": self.J_max, "bump": BUMP_METADATA}


def max_levels(grid):
    """Largest admissible ``J_max`` with ``2^(J_max+1) < pi N / T``."""
    return int(np.ceil(np.log2(grid.nyquist))) - 2 if grid.nyquist > 2 else -1


def build_dyadic_system(grid, J_max=None):
    """Smooth dyadic resolution of unity on ``grid``."""
    top = max_levels(grid)
    if J_max is None:
        J_max = top
    if int(J_max) != J_max or J_max < 0:
        raise InvalidArgument(f"J_max must be a nonnegative integer, got {J_max}")
    J_max = int(J_max)
    if not 2.0 ** (J_max + 1) < grid.nyquist:
        raise ResolutionTooSmall(
            f"2^(J_max+1) = {2 ** (J_max + 1)} must be below pi N / T = {grid.nyquist:.4g}")
    phi = tuple(Multiplier(_phi_evaluator(j), f"phi_{j}") for j in range(J_max + 1))
    return DyadicSystem(grid, J_max, phi)


# ---------------------------------------------------------------------------
# local means

_QUAD_NODES = 2048


def _unit_bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_nodes():
    # the bump and all its derivatives vanish at +-1, so the trapezoid rule
    # converges faster than any power
    x = -1.0 + 2.0 * np.arange(_QUAD_NODES) / _QUAD_NODES
    w = _unit_bump(x) * (2.0 / _QUAD_NODES)
    mass = w.sum()
    return x, w / mass, mass


def unit_bump_profile(x):
    """Unit-mass bump ``exp(-1/(1-x^2))`` on ``(-1, 1)``."""
    return _unit_bump(x) / _bump_nodes()[2]


def _bump_ft_1d(omega):
    """``(2 pi)^(-1/2) int beta(x) exp(-i x omega) dx`` for the unit-mass bump."""
    omega = np.abs(np.asarray(omega, dtype=float))
    uniq, inv = np.unique(omega, return_inverse=True)
    x, w, _ = _bump_nodes()
    out = np.empty(uniq.shape)
    for s in range(0, uniq.size, 512):
        blk = uniq[s:s + 512]
        out[s:s + 512] = np.cos(np.multiply.outer(blk, x)) @ w
    return (out / np.sqrt(2 * np.pi))[inv].reshape(omega.shape)


def local_bump(x):
    """Tensorised unit-mass bump supported in the unit ball, ``x`` of shape (..., n)."""
    n = x.shape[-1]
    rn = np.sqrt(n)
    out = np.ones(x.shape[:-1])
    for i in range(n):
        out = out * rn * unit_bump_profile(rn * x[..., i])
    return out


def _unit_bump_derivatives(x, order):
    """Derivatives 0..order of ``exp(-1/(1-x^2))`` by the recurrence
    ``b^(k+1) = sum_j C(k, j) g^(j+1) b^(k-j)`` with ``g = -1/(1-x^2)``."""
    x = np.asarray(x, dtype=float)
    out = [np.zeros(x.shape) for _ in range(order + 1)]
    inside = np.abs(x) < 1
    xi = x[inside]
    b = [np.exp(-1.0 / (1.0 - xi ** 2))]
    live = b[0] > 0
    # g^(j) = -j!/2 [ (1-x)^-(j+1) + (-1)^j (1+x)^-(j+1) ]
    dg = [None] + [np.where(live, -0.5 * factorial(j) * ((1 - xi) ** -(j + 1) + (-1) ** j * (1 + xi) ** -(j + 1)), 0.0)
                   for j in range(1, order + 1)]
    for k in range(order):
        b.append(sum(comb(k, j) * dg[j + 1] * b[k - j] for j in range(k + 1)))
    for k in range(order + 1):
        out[k][inside] = np.where(live, b[k], 0.0)
    return out


def local_bump_laplacian(x, N):
    """``Delta^N`` of :func:`local_bump`, evaluated from exact derivatives."""
    n = x.shape[-1]
    rn = np.sqrt(n)
    mass = _bump_nodes()[2]
    ders = [[d * rn * rn ** k / mass for k, d in enumerate(_unit_bump_derivatives(rn * x[..., i], 2 * N))]
            for i in range(n)]
    if n == 1:
        return ders[0][2 * N]
    return sum(comb(N, a) * ders[0][2 * a] * ders[1][2 * (N - a)] for a in range(N + 1))


def local_bump_ft(xi):
    """Fourier transform of :func:`local_bump`."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    out = np.ones(xi.shape[:-1])
    for i in range(n):
        out = out * _bump_ft_1d(xi[..., i] / np.sqrt(n))
    return out


def _laplacian_power(N):
    def ev(xi):
        r2 = np.sum(np.asarray(xi) ** 2, axis=-1)
        return (-r2) ** N * local_bump_ft(xi)
    return ev


@dataclass(frozen=True, eq=False)
class LocalMeansKernels:
    """``k_0``, ``k^0`` and ``k^N = Delta^N k^0`` with their transforms."""

    grid: object
    N_mom: int
    k0: GridFunction = field(repr=False)
    k0_base: GridFunction = field(repr=False)
    kN: GridFunction = field(repr=False)
    k0_hat: Multiplier = field(repr=False)
    kN_hat: Multiplier = field(repr=False)
    _lattice: dict = field(default_factory=dict, repr=False)

    def lattice(self, j):
        """Lattice values of ``k0^`` (j = 0) or ``kN^(2^-j xi)`` (j >= 1), cached."""
        if j not in self._lattice:
            m = self.k0_hat if j == 0 else self.kN_hat.dilate(2.0 ** -j)
            self._lattice[j] = m.on_lattice(self.grid)
        return self._lattice[j]

    def metadata(self):
        return {"N_mom": self.N_mom, "profile": BUMP_METADATA["local_means_profile"],
                "support_radius": 1.0}


def build_local_means(grid, N_mom):
    """Local-means kernels.

    ``k^N = Delta^N k^0`` is sampled from the exact derivatives of the bump;
    its transform ``(-|xi|^2)^N k0^`` is what the norms use.
    """
    if int(N_mom) != N_mom or N_mom < 1:
        raise InvalidArgument(f"N_mom must be a positive integer, got {N_mom}")
    N_mom = int(N_mom)
    k0 = GridFunction.from_function(grid, local_bump)
    # sampled from exact derivatives: a spectral Laplacian power amplifies round-off
    kN = GridFunction.from_function(grid, lambda x: local_bump_laplacian(x, N_mom))
    khat = Multiplier(local_bump_ft, "k0^")
    kNhat = Multiplier(_laplacian_power(N_mom), f"(-|xi|^2)^{N_mom} k0^")
    return LocalMeansKernels(grid, N_mom, k0, k0, kN, khat, kNhat)


# ---------------------------------------------------------------------------
# Poisson extension

def poisson_multiplier(t, k=0):
    """``xi -> (-1)^k |xi|^k exp(-t |xi|)``; at ``xi = 0`` this is 1 for k = 0."""
    if not (t > 0):
        raise InvalidArgument(f"t must be positive, got {t}")
    if int(k) != k or k < 0:
        raise InvalidArgument(f"k must be a nonnegative integer, got {k}")
    k = int(k)
    return radial(lambda r: (-r) ** k * np.exp(-t * r), f"poisson(t={t:g},k={k})")


def poisson_extend(f, t, k=0):
    """``d^k/dt^k`` of the Poisson extension of ``f`` at height ``t``."""
    return apply_multiplier(f, poisson_multiplier(t, k))


# ---------------------------------------------------------------------------
# partition window and quarks

@dataclass(frozen=True, eq=False)
class PartitionWindow:
    """Tensorised window with ``sum_m psi(x - m) = 1`` and support in ``d Q_{0,0}``.

    In one variable ``psi1(x) = H((x + d/2)/w) - H((x + d/2 - 1)/w)`` with
    ``w = d - 1``; the integer translates telescope to one.
    """

    grid: object
    d: float

    @property
    def n(self):
        return self.grid.n

    def profile1d(self, x, order=0):
        w = self.d - 1.0
        x = np.asarray(x, dtype=float)
        a = smooth_step((x + self.d / 2) / w, order)
        b = smooth_step((x + self.d / 2 - 1) / w, order)
        return (a - b) / w ** order

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for i in range(x.shape[-1]):
            out = out * self.profile1d(x[..., i])
        return out

    def samples(self):
        return GridFunction.from_function(self.grid, self)

    def metadata(self):
        return {"d": self.d, "construction": "telescoping smooth steps", "step": BUMP_METADATA["step"]}


def build_partition_window(grid, d=1.3):
    if not (1 < d <= 2):
        raise InvalidArgument(f"window overlap d must lie in (1, 2], got {d}")
    if grid.N / grid.T < 8:
        raise ResolutionTooSmall("the grid must carry at least 8 samples per unit length")
    return PartitionWindow(grid, float(d))


def _check_L(L):
    if L != -1 and (L < 1 or (L + 1) % 2):
        raise InvalidArgument(f"L must be -1 or odd and positive, got {L}")


def _monomial_window_1d(window, g, z, order):
    """``d^order/dz^order (z^g psi1(z))`` by Leibniz' rule."""
    out = np.zeros(np.shape(z))
    for j in range(min(order, g) + 1):
        mono = factorial(g) / factorial(g - j) * z ** (g - j)
        out = out + comb(order, j) * mono * window.profile1d(z, order - j)
    return out


def quark_function(window, gamma, L, z, alpha=None):
    """Analytic ``D^alpha ((-Delta)^((L+1)/2) psi^gamma)(z)`` at local coordinates ``z``."""
    _check_L(L)
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    gamma = tuple(int(g) for g in gamma)
    alpha = tuple(int(a) for a in alpha) if alpha is not None else (0,) * n
    K = (L + 1) // 2
    if n == 1:
        return (-1) ** K * _monomial_window_1d(window, gamma[0], z[..., 0], 2 * K + alpha[0])
    out = np.zeros(z.shape[:-1])
    for i in range(K + 1):
        out = out + comb(K, i) * (
            _monomial_window_1d(window, gamma[0], z[..., 0], 2 * i + alpha[0])
            * _monomial_window_1d(window, gamma[1], z[..., 1], 2 * (K - i) + alpha[1]))
    return (-1) ** K * out


@dataclass(frozen=True, eq=False)
class QuarkProfile:
    gamma: tuple
    L: int
    profile: GridFunction = field(repr=False)


def quark_profile(window, gamma, L, gamma_cap=12, method="analytic"):
    """``(-Delta)^((L+1)/2) (x^gamma psi)`` sampled on the window's grid.

    ``method="analytic"`` differentiates the window exactly (Leibniz rule on
    the smooth steps).  ``method="spectral"`` multiplies by ``|xi|^(L+1)``
    on the lattice; its accuracy is limited by
    aliasing of the steep window flanks once ``L >= 3``.  For ``L = -1`` both
    return the sampled ``x^gamma psi``.
    """
    _check_L(L)
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != window.n or min(gamma) < 0:
        raise InvalidArgument(f"gamma must be a multi-index of length {window.n}")
    if sum(gamma) > gamma_cap:
        raise InvalidArgument(f"|gamma| exceeds the configured cap {gamma_cap}")
    if method not in ("analytic", "spectral"):
        raise InvalidArgument(f"unknown profile method {method!r}")
    grid = window.grid
    x = grid.points
    if L == -1 or method == "analytic":
        vals = quark_function(window, gamma, L, x) if L >= 1 else window(x) * np.prod(x ** np.array(gamma), axis=-1)
        return QuarkProfile(gamma, L, GridFunction(grid, vals))
    f = GridFunction(grid, window(x) * np.prod(x ** np.array(gamma), axis=-1))
    f = apply_multiplier(f, grid.abs_xi ** (L + 1))
    return QuarkProfile(gamma, L, GridFunction(grid, f.values[..., 0].real))
