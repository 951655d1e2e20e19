"""Empirical constants of the classical inequalities behind the norms.

Each check evaluates a ratio ``lhs / rhs`` per test function (maximised
over the auxiliary parameters of the inequality) and reports the spread of
these per-function constants across the family.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import band_limited, band_limited_family, spectral_radius, standard_corpus
from .grid import (GridFunction, apply_multiplier, convolve, hardy_littlewood_max, lp_norm,
                   lp_norm_values, weighted_sup)
from .kernels import build_dyadic_system
from .norms import SpaceParams, besov_norm, lift

SPREAD_LIMIT = 10.0


@dataclass
class InequalityResult:
    name: str
    constants: list
    bound: float = None          # absolute upper bound on every constant, when one is known
    lower: float = None

    @property
    def spread(self):
        c = np.asarray(self.constants, dtype=float)
        return float(c.max() / c.min()) if c.size and c.min() > 0 else float("inf")

    @property
    def max_constant(self):
        return float(np.max(self.constants))

    @property
    def passed(self):
        ok = self.spread < SPREAD_LIMIT
        if self.bound is not None:
            ok &= self.max_constant <= self.bound
        if self.lower is not None:
            ok &= float(np.min(self.constants)) >= self.lower
        return bool(ok)

    def row(self):
        return {"property": self.name, "min": float(np.min(self.constants)),
                "max": self.max_constant, "spread": self.spread, "passed": self.passed}


def nikolskii(grid, seed=0, count=20, radii=(1, 2, 4, 8), pairs=((1.0, 2.0), (1.0, np.inf), (2.0, np.inf))):
    """``||f|L_p2|| / (r^{n(1/p1-1/p2)} ||f|L_p1||)`` for spectra in ``|xi| <= r``."""
    n = grid.n
    const = np.zeros(count)
    for k, r in enumerate(radii):
        for i, f in enumerate(band_limited_family(grid, r, count, seed + k)):
            for p1, p2 in pairs:
                expo = n * (1 / p1 - (0 if np.isinf(p2) else 1 / p2))
                const[i] = max(const[i], lp_norm(f, p2) / (r ** expo * lp_norm(f, p1)))
    return InequalityResult("nikolskii", list(const))


def convolution(grid, seed=0, count=20, ps=(1.0, 2.0, np.inf)):
    """``||g*f|L_p|| / ((2 pi)^{-n/2} ||g|L_1|| ||f|L_p||)``; the bound is 1."""
    rng = np.random.default_rng(seed)
    n = grid.n
    x = grid.points
    const = []
    for _ in range(count):
        w = rng.uniform(0.2, 0.5)
        c = rng.uniform(-1, 1, size=n)
        g = GridFunction(grid, np.exp(-np.sum(grid.min_image_points(x - c) ** 2, axis=-1) / (2 * w * w)))
        f = band_limited(grid, 2.0, rng)
        h = convolve(f, g)
        scale = (2 * np.pi) ** (-n / 2) * lp_norm(g, 1.0)
        const.append(max(lp_norm(h, p) / (scale * lp_norm(f, p)) for p in ps))
    return InequalityResult("convolution", const, bound=1.0 + 1e-8)


def peetre(grid, seed=0, count=20, radius=4.0, ps=(1.0, 2.0)):
    """``||sup_z ||f(.-z)|| / (1 + r|z|)^a | L_p|| / ||f|L_p||`` with ``a = n/p + 1``."""
    n = grid.n
    const = []
    for f in band_limited_family(grid, radius, count, seed):
        mag = f.norms()
        vals = []
        for p in ps:
            sup = weighted_sup(mag, grid, radius, n / p + 1.0)
            vals.append(lp_norm_values(sup, grid, p) / lp_norm_values(mag, grid, p))
        const.append(max(vals))
    return InequalityResult("peetre", const, lower=1.0 - 1e-12)


def maximal(grid, seed=0, count=20, ps=(1.5, 2.0, 4.0)):
    """``||M f|L_p|| / ||f|L_p||`` on random band-limited fields."""
    R = spectral_radius(grid)
    const = []
    for f in band_limited_family(grid, R / 8, count, seed):
        Mf = hardy_littlewood_max(f)
        const.append(max(lp_norm(Mf, p) / lp_norm(f, p) for p in ps))
    return InequalityResult("maximal", const, lower=1.0 - 1e-12)


def _random_symbol(rng, grid, terms=3):
    """Smooth symbol of the form ``sum a_j cos(w_j log(1+|xi|^2) + phase_j) + b_j-directional``
    whose derivatives decay like ``|xi|^{-|alpha|}``."""
    n = grid.n
    a = rng.uniform(-1, 1, terms)
    w = rng.uniform(0.2, 1.0, terms)
    ph = rng.uniform(0, 2 * np.pi, terms)
    u = rng.normal(size=(terms, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)

    def m(xi):
        r2 = np.sum(xi ** 2, axis=-1)
        lg = np.log1p(r2)
        out = np.zeros(r2.shape, dtype=complex)
        for j in range(terms):
            direction = np.tanh(xi @ u[j])       # bounded, smooth, Mikhlin-type in xi
            out += a[j] * np.exp(1j * (w[j] * lg + ph[j])) * (0.5 + 0.5 * direction)
        return out
    return m


def symbol_norm(m, n, order=2, extent=64.0, samples=4001):
    """``max_{|alpha|<=order} sup (1+|xi|^2)^{|alpha|/2} |D^alpha m|`` by finite
    differences along the coordinate axes and diagonals."""
    t = np.linspace(-extent, extent, samples)
    h = t[1] - t[0]
    dirs = list(np.eye(n))
    if n == 2:
        dirs += [np.array([1.0, 1.0]) / np.sqrt(2), np.array([1.0, -1.0]) / np.sqrt(2)]
    best = 0.0
    for d in dirs:
        for off in (0.0, 0.7, -1.3):
            base = np.zeros(n)
            if n == 2:
                base = off * np.array([-d[1], d[0]])
            xi = base[None, :] + t[:, None] * d[None, :]
            v = m(xi)
            weight = np.sqrt(1 + np.sum(xi ** 2, axis=-1))
            deriv = v
            for k in range(order + 1):
                if k:
                    deriv = np.gradient(deriv, h)
                best = max(best, float(np.max(weight ** k * np.abs(deriv))))
    return best


def multiplier(grid, seed=0, symbols=10, prm=None):
    """``||m f|B|| / ||f|B||`` for random symbols normalised to ``||m||_N <= 1``."""
    rng = np.random.default_rng(seed)
    prm = prm or SpaceParams(1.0, 2.0, 2.0, n=grid.n)
    sys = build_dyadic_system(grid)
    ms = []
    for _ in range(symbols):
        m = _random_symbol(rng, grid)
        norm = symbol_norm(m, grid.n)
        ms.append(m(grid.xi) / norm)
    const = []
    for _, f in standard_corpus(grid, seed):
        base = besov_norm(f, sys, prm)
        const.append(max(besov_norm(apply_multiplier(f, m), sys, prm) / base for m in ms))
    return InequalityResult("fourier_multiplier", const)


def sobolev(grid, seed=0, count=20, q=2.0):
    """``||f|B^{s1}_{p1,q}|| / ||f|B^{s0}_{p0,q}||`` with ``s0 - n/p0 = s1 - n/p1``."""
    n = grid.n
    sys = build_dyadic_system(grid)
    pairs = [((1.0, 1.0), (1.0 - n + n / 2.0, 2.0)), ((2.0, 1.0), (2.0 - n, np.inf)),
             ((1.5, 2.0), (1.5 - n / 2.0, np.inf))]
    R = spectral_radius(grid)
    const = []
    for f in band_limited_family(grid, R / 4, count, seed):
        vals = []
        for (s0, p0), (s1, p1) in pairs:
            lo = besov_norm(f, sys, SpaceParams(s0, p0, q, n=n))
            hi = besov_norm(f, sys, SpaceParams(s1, p1, q, n=n))
            vals.append(hi / lo)
        const.append(max(vals))
    return InequalityResult("sobolev_embedding", const)


def lift_equivalence(grid, seed=0, prm=None, sigmas=(-2.0, -1.0, 1.0, 2.0), limit=50.0):
    """``||I_sigma f|B^{s-sigma}|| / ||f|B^s||`` must lie in ``[1/C, C]``; the
    per-function constant is the larger of the ratio and its reciprocal."""
    prm = prm or SpaceParams(1.0, 2.0, 2.0, n=grid.n)
    sys = build_dyadic_system(grid)
    const = []
    for _, f in standard_corpus(grid, seed):
        base = besov_norm(f, sys, prm)
        vals = []
        for sg in sigmas:
            r = besov_norm(lift(f, sg), sys, prm.with_(s=prm.s - sg)) / base
            vals.append(max(r, 1.0 / r))
        const.append(max(vals))
    return InequalityResult("lift_equivalence", const, bound=limit)


CHECKS = {
    "nikolskii": nikolskii,
    "peetre": peetre,
    "convolution": convolution,
    "maximal": maximal,
    "fourier_multiplier": multiplier,
    "sobolev_embedding": sobolev,
    "lift_equivalence": lift_equivalence,
}


def run_all(grid, seed=0, which=None):
    return [CHECKS[name](grid, seed=seed) for name in (which or CHECKS)]
