"""Deterministic test-function corpora."""

import numpy as np

from .grid import GridFunction, inverse_transform
from .kernels import bump_radial, max_levels
from .value_space import ValueSpace


def _gauss(x, centre, width):
    return np.exp(-np.sum((x - centre) ** 2, axis=-1) / (2 * width ** 2))


def _unit(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def spectral_radius(grid):
    """Frequency radius inside which the default dyadic system is a partition of unity."""
    return 2.0 ** max_levels(grid)


def band_limited(grid, radius, rng, space=None):
    """Random field whose coefficients live in ``|xi| <= radius``.

    Coefficients are complex Gaussian, tapered by ``rho(2|xi|/radius)`` so
    that the spectrum is smooth and exactly zero beyond ``radius``.
    """
    space = space or ValueSpace(1)
    taper = bump_radial(2.0 * grid.abs_xi / radius)
    c = rng.normal(size=grid.shape + (space.dim,)) + 1j * rng.normal(size=grid.shape + (space.dim,))
    return inverse_transform(grid, c * taper[..., None], space)


def smooth_bumps(grid, count=5, seed=0):
    """Gaussians of moderate width near the origin (round-trip corpus)."""
    rng = np.random.default_rng(seed)
    n = grid.n
    out = []
    for i in range(count):
        width = 0.5 + 0.5 * i / max(count - 1, 1)
        centre = rng.uniform(-0.5, 0.5, size=n)
        out.append((f"bump{i}", GridFunction.from_function(grid, lambda x: _gauss(x, centre, width))))
    return out


def standard_corpus(grid, seed=0):
    """Twenty named functions of mixed character.

    Widths and modulations are scaled to the grid so every spectrum decays
    below 1e-12 well inside the covered band and every spatial profile
    decays below 1e-12 at the period boundary.
    """
    rng = np.random.default_rng(seed)
    n, T = grid.n, grid.T
    R = spectral_radius(grid)
    wmin = 7.5 / R                    # exp(-(wmin R)^2 / 2) < 1e-12
    wmax = T / 16                     # exp(-(T/2 - 1)^2 / (2 wmax^2)) < 1e-12
    widths = np.geomspace(wmin * 1.5, wmax, 5)
    out = []

    def add(name, values, space=None):
        out.append((name, GridFunction(grid, values, space)))

    x = grid.points
    for i, w in enumerate(widths):
        c = rng.uniform(-0.5, 0.5, size=n) * min(1.0, T / 8 - 3 * w) if T / 8 > 3 * w else np.zeros(n)
        add(f"gauss{i}", _gauss(x, c, w))
    for i, frac in enumerate((0.1, 0.2, 0.35, 0.5)):
        w = 1.0 if n == 1 else 0.9
        w = max(w, 2 * wmin)
        omega = np.zeros(n)
        omega[0] = frac * R
        if n == 2:
            omega = frac * R * np.array([np.cos(0.3 + i), np.sin(0.3 + i)])
        add(f"modulated{i}", _gauss(x, 0.0, w) * np.exp(1j * np.sum(x * omega, axis=-1)))
    for i, frac in enumerate((0.125, 0.25, 0.5, 0.75)):
        add(f"random{i}", band_limited(grid, frac * R, rng).values)
    E2 = ValueSpace(2)
    E3 = ValueSpace(3, 1.0)
    for i, space in enumerate((E2, E2, E3)):
        u, v = _unit(rng, space.dim), _unit(rng, space.dim)
        w1, w2 = widths[1 + i], widths[2]
        vals = (_gauss(x, 0.0, w1)[..., None] * u
                + (_gauss(x, 0.7, w2) * np.cos(0.2 * R * x[..., 0]))[..., None] * v)
        add(f"vector{i}", vals, space)
    # centred on the periodic seam, so it straddles the edge of the box
    seam = np.zeros(n)
    seam[0] = -T / 2
    add("boundary", _gauss(grid.min_image_points(x - seam), 0.0, widths[2]))
    mode = np.zeros(n)
    mode[0] = 2 * np.pi / T * round(0.3 * R * T / (2 * np.pi))
    add("single_mode", np.exp(1j * np.sum(x * mode, axis=-1)))
    add("two_scale", _gauss(x, 0.0, widths[3]) + 0.3 * _gauss(x, 0.3, widths[0]))
    add("gauss_derivative", -x[..., 0] / widths[2] ** 2 * _gauss(x, 0.0, widths[2]))
    return out


def band_limited_family(grid, radius, count=20, seed=0):
    """Scalar random fields with spectrum in ``|xi| <= radius``."""
    rng = np.random.default_rng(seed)
    return [band_limited(grid, radius, rng) for _ in range(count)]
