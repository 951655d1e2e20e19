"""Equivalent norms of B^s_{p,q}(E) and F^s_{p,q}(E), the lift, and the
sequence-space norms b_{p,q} and f_{p,q}."""

from dataclasses import dataclass, field, replace
from math import ceil, floor

import numpy as np
from scipy import optimize

from .errors import (DegenerateInput, InvalidArgument, InvalidKernel,
                     QuadratureFailure, ResolutionTooSmall)
from .grid import Multiplier, apply_multiplier, lp_norm_values, radial, weighted_sup
from .kernels import bump_radial, smooth_step


@dataclass(frozen=True)
class SpaceParams:
    """Smoothness and integrability parameters.

    ``a``, ``k_poisson`` and ``N_mom`` default to values derived from the
    others when left as ``None``.
    """

    s: float
    p: float
    q: float
    family: str = "B"
    n: int = 1
    K: int = None
    L: int = None
    a: float = None
    mu: int = 3
    k_poisson: int = None
    N_mom: int = None

    def __post_init__(self):
        if self.family not in ("B", "F"):
            raise InvalidArgument(f"family must be 'B' or 'F', got {self.family!r}")
        if not (self.p > 0) or not (self.q > 0):
            raise InvalidArgument("p and q must be positive")
        if self.family == "F" and np.isinf(self.p):
            raise InvalidArgument("the F family requires p < infinity")
        if self.n not in (1, 2):
            raise InvalidArgument(f"n must be 1 or 2, got {self.n}")
        if int(self.mu) != self.mu or self.mu < 0:
            raise InvalidArgument(f"mu must be a nonnegative integer, got {self.mu}")
        if self.k_poisson is not None and (int(self.k_poisson) != self.k_poisson or self.k_poisson < 1):
            raise InvalidArgument(f"k_poisson must be a positive integer, got {self.k_poisson}")
        if self.N_mom is not None and (int(self.N_mom) != self.N_mom or self.N_mom < 1):
            raise InvalidArgument(f"N_mom must be a positive integer, got {self.N_mom}")
        if self.a is not None and not (self.a > 0):
            raise InvalidArgument(f"a must be positive, got {self.a}")

    @property
    def sigma_p(self):
        return self.n * max(1.0 / self.p - 1.0, 0.0)

    @property
    def sigma_pq(self):
        return self.n * max(1.0 / min(self.p, self.q) - 1.0, 0.0)

    @property
    def sigma(self):
        """The threshold relevant for the family."""
        return self.sigma_p if self.family == "B" else self.sigma_pq

    @property
    def k(self):
        """Poisson derivative order, default ``ceil(max(s, 0)) + n + 2``."""
        if self.k_poisson is not None:
            return int(self.k_poisson)
        return int(ceil(max(self.s, 0.0))) + self.n + 2

    @property
    def n_mom(self):
        """Local-means moment order, default the least ``N`` with ``2N > s``."""
        if self.N_mom is not None:
            return int(self.N_mom)
        return max(1, int(floor(self.s / 2)) + 1)

    @property
    def a_value(self):
        if self.a is not None:
            return float(self.a)
        return self.n / min(self.p, self.q) + 1.0

    @property
    def K_value(self):
        return int(self.K) if self.K is not None else 1 + int(floor(self.s))

    @property
    def L_value(self):
        return int(self.L) if self.L is not None else max(-1, int(floor(self.sigma - self.s)))

    @property
    def n_over_p(self):
        return 0.0 if np.isinf(self.p) else self.n / self.p

    def check_maximal(self):
        need = self.n / self.p if self.family == "B" else self.n / min(self.p, self.q)
        if not self.a_value > need:
            raise InvalidArgument(f"a = {self.a_value} must exceed {need:g}")

    def check_atoms(self):
        if self.K_value < 1 + floor(self.s):
            raise InvalidArgument(f"K = {self.K_value} violates K >= 1 + floor(s) = {1 + floor(self.s)}")
        if self.L_value < floor(self.sigma - self.s):
            raise InvalidArgument(
                f"L = {self.L_value} violates L >= floor(sigma - s) = {floor(self.sigma - self.s)}")

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"s": self.s, "p": _num(self.p), "q": _num(self.q), "family": self.family,
                "n": self.n, "K": self.K_value, "L": self.L_value, "a": self.a_value,
                "mu": self.mu, "k_poisson": self.k, "N_mom": self.n_mom,
                "sigma_p": self.sigma_p, "sigma_pq": self.sigma_pq}


def _num(x):
    return "inf" if np.isinf(x) else x


# ---------------------------------------------------------------------------
# helpers

def _lq(values, q):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    top = values.max()
    if np.isinf(q) or top == 0:
        return float(top)
    return float(top * np.sum((values / top) ** q) ** (1.0 / q))


def _weighted_terms(norms, s, j0=0):
    j = np.arange(j0, j0 + len(norms))
    return 2.0 ** (j * s) * np.asarray(norms)


def _pointwise_lq(fields, s, q, j0=0):
    """``(sum_j 2^{jsq} F_j(x)^q)^{1/q}`` for a stack of nonnegative fields."""
    fields = np.asarray(fields)
    w = 2.0 ** (s * np.arange(j0, j0 + fields.shape[0]))
    w = w.reshape((-1,) + (1,) * (fields.ndim - 1))
    terms = w * fields
    if np.isinf(q):
        return terms.max(axis=0)
    top = terms.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    return top * np.sum((terms / safe) ** q, axis=0) ** (1.0 / q)


def _effective_radius(f, rel=1e-13):
    """Largest lattice |xi| carrying a coefficient above ``rel`` times the maximum."""
    mag = f.space.norms(f.coefficients)
    top = mag.max()
    if top == 0:
        return 0.0
    return float(f.grid.abs_xi[mag > rel * top].max())


# ---------------------------------------------------------------------------
# Fourier-analytic norms

def _check_coverage(f, sys, tol=1e-10):
    cover = sys.coverage()
    bad = np.abs(cover - 1.0) > 1e-10
    if not bad.any():
        return
    c2 = f.space.norms(f.coefficients) ** 2
    total = c2.sum()
    if total > 0 and np.sqrt(c2[bad].sum() / total) > tol:
        raise ResolutionTooSmall(
            "the spectrum of f extends beyond the levels covered by J_max "
            f"(relative energy {np.sqrt(c2[bad].sum() / total):.2e})")


def dyadic_fields(f, sys):
    """Pointwise norms ``||(phi_j f^)(x)|E||`` for ``j = 0..J_max``, cached on ``f``."""
    key = ("dyadic", id(sys))
    if key not in f.memo:
        if f.grid != sys.grid:
            raise InvalidArgument("function and dyadic system live on different grids")
        _check_coverage(f, sys)
        f.memo[key] = np.stack([apply_multiplier(f, sys.lattice(j)).norms()
                                for j in range(sys.J_max + 1)])
    return f.memo[key]


def besov_norm(f, sys, prm):
    """``(sum_j 2^{jsq} ||(phi_j f^)|L_p||^q)^{1/q}``, a supremum when q = inf."""
    fields = dyadic_fields(f, sys)
    norms = [lp_norm_values(F, f.grid, prm.p) for F in fields]
    return _lq(_weighted_terms(norms, prm.s), prm.q)


def triebel_norm(f, sys, prm):
    """``|| (sum_j 2^{jsq} ||(phi_j f^)(.)|E||^q)^{1/q} | L_p ||``."""
    if np.isinf(prm.p):
        raise InvalidArgument("the F norm requires p < infinity")
    fields = dyadic_fields(f, sys)
    return lp_norm_values(_pointwise_lq(fields, prm.s, prm.q), f.grid, prm.p)


def fourier_norm(f, sys, prm):
    return besov_norm(f, sys, prm) if prm.family == "B" else triebel_norm(f, sys, prm)


# ---------------------------------------------------------------------------
# local means

_TAIL_TOL = 1e-15


def local_means_fields(f, kern):
    """Level-0 and level-j fields of the local-means norm, cached on ``f``."""
    key = ("local", id(kern))
    if key in f.memo:
        return f.memo[key]
    g = f.grid
    F0 = apply_multiplier(f, kern.lattice(0)).norms()
    top = _effective_radius(f)
    j_top = int(ceil(np.log2(max(top, 1.0)))) + 2
    out = [F0]
    j = 1
    while True:
        F = apply_multiplier(f, kern.lattice(j)).norms()
        out.append(F)
        # beyond j_top each further level shrinks by at least 4^-N_mom
        if j >= j_top and F.max() <= _TAIL_TOL * max(x.max() for x in out):
            break
        if j > j_top + 200:
            break
        j += 1
    fields = np.stack(out)
    f.memo[key] = fields
    return fields


def local_means_norm(f, kern, prm):
    """``||k_0 * f|L_p|| + (sum_{j>=1} 2^{jsq} ||k^N_j * f|L_p||^q)^{1/q}`` (B)
    and the analogous F expression."""
    if not 2 * kern.N_mom > prm.s:
        raise InvalidArgument(f"local means need 2 N_mom > s (N_mom = {kern.N_mom}, s = {prm.s})")
    fields = local_means_fields(f, kern)
    first = lp_norm_values(fields[0], f.grid, prm.p)
    if prm.family == "B":
        norms = [lp_norm_values(F, f.grid, prm.p) for F in fields[1:]]
        return first + _lq(_weighted_terms(norms, prm.s, 1), prm.q)
    if np.isinf(prm.p):
        raise InvalidArgument("the F norm requires p < infinity")
    return first + lp_norm_values(_pointwise_lq(fields[1:], prm.s, prm.q, 1), f.grid, prm.p)


# ---------------------------------------------------------------------------
# Peetre maximal norms

def _annulus_kernel(xi):
    r = np.sqrt(np.sum(np.asarray(xi) ** 2, axis=-1))
    return r ** 2 * (bump_radial(r) - bump_radial(4 * r))


def peetre_kernels():
    """Default pair: ``Psi = rho`` and the Laplacian-type annulus bump
    ``psi(xi) = |xi|^2 (rho(xi) - rho(4 xi))``."""
    return (radial(bump_radial, "rho"), Multiplier(_annulus_kernel, "|xi|^2(rho(xi)-rho(4xi))"))


def validate_peetre_kernels(Psi, psi, grid, S, eps=0.9, tol=1e-8):
    """Numerical check of the support and moment conditions; returns residuals."""
    r = grid.abs_xi
    low = Psi.on_lattice(grid)[r < 2 * eps]
    ring = psi.on_lattice(grid)[(r > eps / 2) & (r < 2 * eps)]
    if low.size and np.abs(low).min() <= 0:
        raise InvalidKernel("Psi vanishes somewhere on |xi| < 2 eps")
    if ring.size and np.abs(ring).min() <= 0:
        raise InvalidKernel("psi vanishes somewhere on the annulus eps/2 < |xi| < 2 eps")
    residual = 0.0
    if S >= 0:
        # Taylor coefficients through order S along several rays through 0
        delta = 0.05
        t = np.linspace(-delta, delta, 41)
        dirs = [np.eye(grid.n)[i] for i in range(grid.n)]
        if grid.n == 2:
            dirs += [np.array([1.0, 1.0]) / np.sqrt(2), np.array([1.0, -1.0]) / np.sqrt(2)]
        scale = np.abs(psi(np.array([[eps] + [0.0] * (grid.n - 1)]))).max()
        for d in dirs:
            vals = psi(t[:, None] * d[None, :])
            deg = min(S + 4, 12)
            for part in (np.real(vals), np.imag(vals)):
                coef = np.polynomial.polynomial.polyfit(t / delta, part, deg)
                low_coef = np.abs(coef[:S + 1]) / delta ** np.arange(S + 1)
                residual = max(residual, float(low_coef.max()) / max(scale, 1e-300))
        if residual > tol:
            raise InvalidKernel(f"psi moments through order {S} do not vanish (residual {residual:.2e})")
    return residual


def peetre_fields(f, Psi, psi, a):
    """Peetre maximal functions for ``j = 0`` (with Psi) and ``j >= 1`` (with psi)."""
    key = ("peetre", id(Psi), id(psi), float(a))
    if key in f.memo:
        return f.memo[key]
    g = f.grid
    top = _effective_radius(f)
    j_top = int(ceil(np.log2(max(top, 1.0)))) + 2
    fmax = f.space.norms(f.coefficients).max()
    fields = [weighted_sup(apply_multiplier(f, Psi).norms(), g, 1.0, a)]
    j = 1
    while True:
        mult = psi.dilate(2.0 ** -j).on_lattice(g)
        spec = np.abs(mult)[..., None] * np.abs(f.coefficients)
        if spec.max() <= 1e-16 * max(fmax, 1e-300):
            if j > j_top:
                break
            fields.append(np.zeros(g.shape))
        else:
            F = apply_multiplier(f, mult).norms()
            fields.append(weighted_sup(F, g, 2.0 ** j, a))
        if j > j_top + 200:
            break
        j += 1
    fields = np.stack(fields)
    f.memo[key] = fields
    return fields


def peetre_norm(f, Psi, psi, prm, validate=True):
    """``||(Psi^* f)_a|L_p|| + (sum_j 2^{jsq} ||(psi_j^* f)_a|L_p||^q)^{1/q}``
    (B) and the analogous F expression."""
    prm.check_maximal()
    if validate:
        key = ("peetre-valid", id(Psi), id(psi), int(floor(prm.s)))
        if key not in f.memo:
            validate_peetre_kernels(Psi, psi, f.grid, int(floor(prm.s)))
            f.memo[key] = True
    fields = peetre_fields(f, Psi, psi, prm.a_value)
    first = lp_norm_values(fields[0], f.grid, prm.p)
    if prm.family == "B":
        norms = [lp_norm_values(F, f.grid, prm.p) for F in fields[1:]]
        return first + _lq(_weighted_terms(norms, prm.s, 1), prm.q)
    return first + lp_norm_values(_pointwise_lq(fields[1:], prm.s, prm.q, 1), f.grid, prm.p)


def plain_kernel_norm(f, Psi, psi, prm):
    """The non-maximal counterpart of :func:`peetre_norm` (the ``y = 0`` term)."""
    g = f.grid
    fields = [apply_multiplier(f, Psi).norms()]
    for j in range(1, len(peetre_fields(f, Psi, psi, prm.a_value))):
        fields.append(apply_multiplier(f, psi.dilate(2.0 ** -j)).norms())
    first = lp_norm_values(fields[0], g, prm.p)
    if prm.family == "B":
        norms = [lp_norm_values(F, g, prm.p) for F in fields[1:]]
        return first + _lq(_weighted_terms(norms, prm.s, 1), prm.q)
    return first + lp_norm_values(_pointwise_lq(np.asarray(fields[1:]), prm.s, prm.q, 1), g, prm.p)


# ---------------------------------------------------------------------------
# harmonic (Poisson) norms

def harmonic_cutoff():
    """``phi = 1`` on ``|xi| <= 1`` and ``0`` on ``|xi| >= 3/2``."""
    return radial(lambda r: 1.0 - smooth_step((r - 1.0) / 0.5), "cutoff[1,3/2]")


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)
_SUP_SAMPLES = 16
_PANEL_MARGIN = 6
_MAX_SPLIT = 256


def _panels(nu_max):
    return [(2.0 ** (-nu - 1), 2.0 ** -nu) for nu in range(nu_max + 1)]


def _split_nodes(lo, hi, split):
    """8-point Gauss nodes and weights on ``[lo, hi]`` cut into ``split`` pieces."""
    edges = np.linspace(lo, hi, split + 1)
    a, b = edges[:-1, None], edges[1:, None]
    ts = 0.5 * (b - a) * _GAUSS_X + 0.5 * (a + b)
    ws = 0.5 * (b - a) * _GAUSS_W + 0 * ts
    return ts.ravel(), ws.ravel()


def _sup_nodes(nu_max):
    return np.unique(np.concatenate(
        [np.linspace(lo, hi, _SUP_SAMPLES + 1) for lo, hi in _panels(nu_max)]))


def harmonic_panels(f):
    """Index of the last dyadic t-panel: ``t |xi|`` reaches ``2^-6`` there for
    the largest frequency whose coefficient exceeds 1e-13 of the maximum."""
    top = max(_effective_radius(f), 1.0)
    return int(ceil(np.log2(top))) + _PANEL_MARGIN


def _poisson_field(f, t, k):
    """``||d^k u(x, t)/dt^k|E||`` on the grid."""
    r = f.grid.abs_xi
    with np.errstate(divide="ignore"):
        expo = k * np.log(r) - t * r if k else -t * r
    # zero the underflowing tail explicitly; subnormal arithmetic is slow
    live = expo > -700.0
    mult = np.zeros_like(r)
    mult[live] = (-1.0) ** k * np.exp(expo[live])
    return apply_multiplier(f, mult).norms()


def _panel_sum(f, prms, k, lo, hi, split):
    """Contribution of ``[lo, hi]`` to each t-integral: scalars for B,
    pointwise fields for F."""
    g = f.grid
    out = [0.0 if prm.family == "B" else np.zeros(g.shape) for prm in prms]
    for t, w in zip(*_split_nodes(lo, hi, split)):
        mag = _poisson_field(f, t, k)
        # shared per node: L_p norms (B) and pointwise powers (F)
        lp, pw = {}, {}
        for i, prm in enumerate(prms):
            c = w * t ** ((k - prm.s) * prm.q - 1)
            if prm.family == "B":
                if prm.p not in lp:
                    lp[prm.p] = lp_norm_values(mag, g, prm.p)
                out[i] += c * lp[prm.p] ** prm.q
            else:
                if prm.q not in pw:
                    pw[prm.q] = mag if prm.q == 1 else mag * mag if prm.q == 2 else mag ** prm.q
                out[i] += c * pw[prm.q]
    return out


def _error_weights(prms, totals):
    """Linearised relative sensitivity of each final norm to its integral."""
    out = []
    for prm, A in zip(prms, totals):
        if prm.family == "B":
            out.append(1.0 / (prm.q * A) if A > 0 else 0.0)
        else:
            e = prm.p / prm.q
            floor_ = 1e-300 + 1e-14 * A.max()
            w = np.where(A > floor_, A, floor_) ** (e - 1)
            denom = prm.q * np.sum(A ** e)
            out.append(w / denom if denom > 0 else np.zeros_like(A))
    return out


def _finish(prm, A, grid):
    if prm.family == "B":
        return A ** (1.0 / prm.q)
    return lp_norm_values(A ** (1.0 / prm.q), grid, prm.p)


def _integrals(f, prms, k, nu_max, check, rtol):
    """t-integrals for parameter sets sharing the derivative order ``k``.

    Each dyadic panel carries an 8-point Gauss rule.  With ``check`` each
    panel is also integrated on halves; the panel whose halving moves the
    final norms most (relative, to first order) is halved again until the
    summed changes fall below ``rtol``.  Integrands with kinks, as arise for
    ``p = 1`` or ``q = 1``, need this.
    """
    panels = _panels(nu_max)
    coarse = [_panel_sum(f, prms, k, lo, hi, 1) for lo, hi in panels]
    totals = [sum(c[i] for c in coarse) for i in range(len(prms))]
    if not check:
        return totals
    weights = _error_weights(prms, totals)

    def change(a, b):
        return max(abs(float(np.sum(w * (y - x)))) for w, x, y in zip(weights, a, b))

    fine, err, split = [], [], []
    for (lo, hi), c in zip(panels, coarse):
        fine.append(_panel_sum(f, prms, k, lo, hi, 2))
        err.append(change(c, fine[-1]))
        split.append(2)
    del coarse
    while sum(err) > rtol:
        P = int(np.argmax(err))
        if split[P] >= _MAX_SPLIT:
            lo, hi = panels[P]
            raise QuadratureFailure(
                f"t-panel [{lo:.3g}, {hi:.3g}] did not converge (relative change "
                f"{err[P]:.2e} at {split[P]} sub-panels, total {sum(err):.2e})")
        split[P] *= 2
        nxt = _panel_sum(f, prms, k, *panels[P], split[P])
        err[P] = change(fine[P], nxt)
        fine[P] = nxt
    return [sum(c[i] for c in fine) for i in range(len(prms))]


def _sup_refine(samples, ts, prm, f):
    """Supremum over t for q = inf.

    For B the sampled maximum is bracketed by its neighbours and refined by
    bounded scalar maximisation; for F each point gets parabolic refinement.
    """
    grid = f.grid
    e = prm.k - prm.s
    if prm.family == "B":
        vals = np.array([t ** e * lp_norm_values(m, grid, prm.p) for t, m in zip(ts, samples)])
        i = int(np.argmax(vals))
        if not 0 < i < len(ts) - 1:
            return float(vals[i])
        res = optimize.minimize_scalar(
            lambda t: -t ** e * lp_norm_values(_poisson_field(f, t, prm.k), grid, prm.p),
            bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-10 * ts[i]})
        return float(max(vals[i], -res.fun))
    vals = np.stack([t ** e * m for t, m in zip(ts, samples)])
    i = np.argmax(vals, axis=0)
    best = np.take_along_axis(vals, i[None], 0)[0]
    inner = (i > 0) & (i < len(ts) - 1)
    if inner.any():
        ii = i[inner]
        y0 = np.take_along_axis(vals[:, inner], (ii - 1)[None], 0)[0]
        y1 = best[inner]
        y2 = np.take_along_axis(vals[:, inner], (ii + 1)[None], 0)[0]
        best = best.copy()
        best[inner] = _vertex(ts[ii - 1], ts[ii], ts[ii + 1], y0, y1, y2)
    return lp_norm_values(best, grid, prm.p)


def _vertex(x0, x1, x2, y0, y1, y2):
    # value at the vertex of the parabola through three points, never below y1
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    c = (d12 - d01) / (x2 - x0)
    b = d01 - c * (x0 + x1)
    with np.errstate(divide="ignore", invalid="ignore"):
        xv = -b / (2 * c)
        yv = y1 + (xv - x1) * (b + c * (xv + x1))
    ok = (c < 0) & (xv > x0) & (xv < x2) & np.isfinite(yv)
    return np.where(ok, np.maximum(yv, y1), y1)


def harmonic_norms(f, prms, phi=None, check=True, rtol=1e-6):
    """Harmonic norms for several parameter sets sharing one Poisson sweep.

    ``||(phi f^)|L_p|| + (int_0^1 t^{(k-s)q} ||d^k u(.,t)/dt^k|L_p||^q dt/t)^{1/q}``
    for B, and the pointwise analogue for F.  For ``q = inf`` the integral
    becomes a supremum over t, taken on uniform samples per panel with
    parabolic refinement at the peak.
    """
    phi = phi or harmonic_cutoff()
    g = f.grid
    for prm in prms:
        if prm.family == "F" and np.isinf(prm.p):
            raise InvalidArgument("the F norm requires p < infinity")
    nu_max = harmonic_panels(f)
    low = apply_multiplier(f, phi).norms()
    results = [None] * len(prms)
    for k in sorted({prm.k for prm in prms}):
        finite = [i for i, prm in enumerate(prms) if prm.k == k and not np.isinf(prm.q)]
        sups = [i for i, prm in enumerate(prms) if prm.k == k and np.isinf(prm.q)]
        if finite:
            group = [prms[i] for i in finite]
            for i, prm, A in zip(finite, group, _integrals(f, group, k, nu_max, check, rtol)):
                results[i] = _finish(prm, A, g)
        if sups:
            ts = _sup_nodes(nu_max)
            samples = [_poisson_field(f, t, k) for t in ts]
            for i in sups:
                results[i] = _sup_refine(samples, ts, prms[i], f)
    return [float(lp_norm_values(low, g, prm.p) + r) for prm, r in zip(prms, results)]


def harmonic_norm(f, prm, phi=None, check=True):
    return harmonic_norms(f, [prm], phi, check)[0]


# ---------------------------------------------------------------------------
# lift

def lift(f, sigma):
    """``I_sigma f = ((1 + |xi|^2)^{sigma/2} f^)``."""
    if sigma == 0:
        return f
    return apply_multiplier(f, (1.0 + f.grid.abs_xi ** 2) ** (sigma / 2.0))


# ---------------------------------------------------------------------------
# sequence spaces

class CoefficientField:
    """Coefficients ``lambda_{nu,m}`` stored densely per level.

    Level ``nu`` holds an array of shape ``(M_nu,)*n`` with ``M_nu = T 2^nu``;
    array index ``i`` corresponds to ``m = i - M_nu/2`` (the cube centred at
    ``2^-nu m``).
    """

    def __init__(self, n, T, levels=None):
        self.n = n
        self.T = float(T)
        self.levels = {}
        for nu, arr in (levels or {}).items():
            self.levels[int(nu)] = np.asarray(arr, dtype=complex)

    @classmethod
    def for_grid(cls, grid):
        return cls(grid.n, grid.T)

    def size(self, nu):
        M = self.T * 2.0 ** nu
        if abs(M - round(M)) > 1e-9 or round(M) % 2:
            raise InvalidArgument(f"T 2^nu = {M} must be an even integer")
        return int(round(M))

    def level(self, nu, create=True):
        if nu not in self.levels and create:
            self.levels[nu] = np.zeros((self.size(nu),) * self.n, dtype=complex)
        return self.levels.get(nu)

    def index(self, nu, m):
        M = self.size(nu)
        return tuple((int(mi) + M // 2) % M for mi in np.atleast_1d(m))

    def __setitem__(self, key, value):
        nu, m = key
        self.level(nu)[self.index(nu, m)] = value

    def __getitem__(self, key):
        nu, m = key
        arr = self.levels.get(nu)
        return 0j if arr is None else arr[self.index(nu, m)]

    @property
    def nu_max(self):
        live = [nu for nu, a in self.levels.items() if np.any(a != 0)]
        return max(live) if live else -1

    def items(self):
        """Nonzero entries as ``((nu, m), value)`` in level order."""
        for nu in sorted(self.levels):
            arr = self.levels[nu]
            M = arr.shape[0]
            for idx in zip(*np.nonzero(arr)):
                yield (nu, tuple(int(i) - M // 2 for i in idx)), arr[idx]

    def scaled(self, c):
        return CoefficientField(self.n, self.T, {nu: c * a for nu, a in self.levels.items()})

    def copy(self):
        return self.scaled(1.0)

    def is_zero(self):
        return all(not np.any(a) for a in self.levels.values())


def seq_norm_b(lam, p, q):
    """``(sum_nu (sum_m |lambda_{nu,m}|^p)^{q/p})^{1/q}``."""
    per_level = [_lq(np.abs(a).ravel(), p) for nu, a in sorted(lam.levels.items())]
    return _lq(per_level, q)


def seq_norm_f(lam, p, q, grid):
    """``|| (sum |lambda_{nu,m} chi^{(p)}_{nu,m}|^q)^{1/q} | L_p ||``.

    The integrand is constant on the cells of side ``2^(-nu_max-1)`` that
    refine every level's (half-open) cubes, so the integral is evaluated
    exactly on that cell lattice.
    """
    if lam.is_zero():
        return 0.0
    nu_max = lam.nu_max
    if grid.h > 2.0 ** -nu_max / 4:
        raise ResolutionTooSmall("the grid must resolve the finest cubes with 4 samples per side")
    n = lam.n
    cells = lam.size(nu_max + 1)
    acc = np.zeros((cells,) * n)
    top = None
    for nu, arr in sorted(lam.levels.items()):
        if not np.any(arr):
            continue
        M = arr.shape[0]
        # cell c has centre 2^-(nu_max+1) (c - cells/2 + 1/2); its level-nu
        # cube index is floor of (centre 2^nu + 1/2)
        c = np.arange(cells)
        centre = (c - cells / 2 + 0.5) * 2.0 ** -(nu_max + 1)
        m = np.floor(centre * 2.0 ** nu + 0.5).astype(int)
        idx = (m + M // 2) % M
        chi = 2.0 ** (nu * n / p) if not np.isinf(p) else 1.0
        vals = np.abs(arr)[np.ix_(*([idx] * n))] * chi
        if np.isinf(q):
            acc = np.maximum(acc, vals)
        else:
            acc = acc + vals ** q
    G = acc if np.isinf(q) else acc ** (1.0 / q)
    if np.isinf(p):
        return float(G.max())
    vol = 2.0 ** (-(nu_max + 1) * n)
    return float((vol * np.sum(G ** p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# comparison harness

NORM_TAGS = ("fourier", "local_means", "peetre", "harmonic")


@dataclass(eq=False)
class NormEngines:
    """Kernels needed by every norm on one grid."""

    grid: object
    sys: object
    Psi: Multiplier
    psi: Multiplier
    phi: Multiplier
    local: dict = field(default_factory=dict)

    def local_means(self, N_mom):
        from .kernels import build_local_means
        if N_mom not in self.local:
            self.local[N_mom] = build_local_means(self.grid, N_mom)
        return self.local[N_mom]

    def metadata(self):
        return {"dyadic": self.sys.metadata(), "peetre": [self.Psi.label, self.psi.label],
                "harmonic_cutoff": self.phi.label,
                "harmonic_quadrature": {"rule": "Gauss-Legendre", "points": 8,
                                        "panels": f"dyadic, ceil(log2 |xi|_eff) + {_PANEL_MARGIN}",
                                        "q_inf": f"{_SUP_SAMPLES} samples per panel, then bounded scalar maximisation (B) "
                                                 "or pointwise parabolic refinement (F)"},
                "local_means": {str(k): v.metadata() for k, v in self.local.items()}}


def build_engines(grid, J_max=None):
    from .kernels import build_dyadic_system
    Psi, psi = peetre_kernels()
    return NormEngines(grid, build_dyadic_system(grid, J_max), Psi, psi, harmonic_cutoff())


def compute_norm(tag, f, prm, engines):
    if tag == "fourier":
        return fourier_norm(f, engines.sys, prm)
    if tag == "local_means":
        return local_means_norm(f, engines.local_means(prm.n_mom), prm)
    if tag == "peetre":
        return peetre_norm(f, engines.Psi, engines.psi, prm)
    if tag == "harmonic":
        return harmonic_norm(f, prm, engines.phi)
    raise InvalidArgument(f"unknown norm tag {tag!r}")


@dataclass
class NormReport:
    values: dict
    ratios: dict

    def rows(self, function_id):
        return ([(function_id, t, v) for t, v in self.values.items()],
                [(function_id, a, b, r) for (a, b), r in self.ratios.items()])


def compare_norms(f, prm, which=NORM_TAGS, engines=None):
    """All selected norms of ``f`` and their pairwise ratios."""
    if not np.any(f.values):
        raise DegenerateInput("norm comparison needs a nonzero function")
    engines = engines or build_engines(f.grid)
    tags = [t for t in NORM_TAGS if t in set(which)]
    if not tags:
        raise InvalidArgument("no norm tags selected")
    values = {t: compute_norm(t, f, prm, engines) for t in tags}
    ratios = {(a, b): values[a] / values[b] for a in tags for b in tags if a < b or a == b}
    return NormReport(values, ratios)
