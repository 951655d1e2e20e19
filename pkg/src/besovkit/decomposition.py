"""Atomic and quarkonial decompositions built from the Poisson extension,
their synthesis, and atom validation."""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import comb, factorial, floor

import numpy as np
from scipy.special import gammainc

from .errors import (ConvergenceFailure, DegenerateInput, InternalInconsistency,
                     InvalidArgument, ResolutionTooSmall, TruncationFailure)
from .grid import GridFunction, apply_multiplier, lp_norm_values
from .kernels import _check_L, build_local_means, quark_function
from .norms import (CoefficientField, SpaceParams, _effective_radius, local_means_norm,
                    seq_norm_b, seq_norm_f)

MU_MIN = 2
SUP_BOX = 1.5


# ---------------------------------------------------------------------------
# constants of the Poisson representation

def boundary_constants(k):
    """``c_l`` with ``f = sum_{l<k} c_l d^l u(.,1) + c int_0^1 t^{k-1} d^k u dt``."""
    return [(-1) ** l / factorial(l) for l in range(k)]


def integral_constant(k):
    return (-1) ** k / factorial(k - 1)


def integrated_by_parts(g_derivs, k):
    """``int_0^1 t^{k-1} g^{(k)}(t) dt`` by the recurrence
    ``I_1 = g(1) - g(0)``, ``I_k = g^{(k-1)}(1) - (k-1) I_{k-1}``.

    ``g_derivs(j, t)`` returns the j-th derivative of g at t; only
    ``t = 0`` (for j = 0) and ``t = 1`` are requested.
    """
    val = g_derivs(0, 1.0) - g_derivs(0, 0.0)
    for j in range(2, k + 1):
        val = g_derivs(j - 1, 1.0) - (j - 1) * val
    return val


def _panel_multiplier(r, k, lo, hi):
    """``int_lo^hi t^{k-1} (-r)^k e^{-t r} dt = (-1)^k Gamma(k)[P(k, hi r) - P(k, lo r)]``."""
    return (-1) ** k * factorial(k - 1) * (gammainc(k, hi * r) - gammainc(k, lo * r))


def truncation_multiplier(r, k, mu, nu_max):
    """Fourier symbol of ``f`` minus the levels ``mu..nu_max``: ``P(k, r 2^(mu-nu_max))``."""
    return gammainc(k, r * 2.0 ** (mu - nu_max))


def _level_t_range(nu, mu):
    return 2.0 ** (mu - nu), 2.0 ** (mu - nu + 1)


# ---------------------------------------------------------------------------
# window synthesis

def _neighbour_offsets(n):
    return list(product((-1, 0, 1), repeat=n))


def _local_coordinates(grid, nu):
    """Per axis: nearest cube index and the local coordinate ``2^nu x - m``."""
    u = grid.axis * 2.0 ** nu
    base = np.floor(u + 0.5).astype(int)
    return base, u - base


def window_synthesis(grid, nu, coeffs, profile):
    """``sum_m coeffs[m] profile(2^nu x - m)`` for a profile supported in the
    open cube of side 2 around 0.

    ``coeffs`` has shape ``(M_nu,)*n + (d,)`` in :class:`CoefficientField`
    index order; ``profile(z)`` takes local coordinates of shape ``(..., n)``.
    """
    n = grid.n
    M = coeffs.shape[0]
    base, z0 = _local_coordinates(grid, nu)
    out = np.zeros(grid.shape + (coeffs.shape[-1],), dtype=complex)
    for off in _neighbour_offsets(n):
        idx = [(base + o + M // 2) % M for o in off]
        z = [z0 - o for o in off]
        mesh = np.meshgrid(*z, indexing="ij")
        vals = profile(np.stack(mesh, axis=-1))
        if not np.any(vals):
            continue
        c = coeffs[np.ix_(*idx)] if n > 1 else coeffs[idx[0]]
        out += c * vals[..., None]
    return out


def _centre_indices(grid, nu):
    """Grid indices of the cube centres ``2^-nu m`` along one axis, in
    CoefficientField order; requires ``2^-nu`` to be a multiple of ``h``."""
    step = 2.0 ** -nu / grid.h
    if abs(step - round(step)) > 1e-9:
        raise ResolutionTooSmall(f"cube centres at level {nu} are not grid points")
    step = int(round(step))
    M = int(round(grid.T * 2.0 ** nu))
    m = np.arange(M) - M // 2
    return (m * step + grid.N // 2) % grid.N


def _sample_centres(values, grid, nu):
    idx = _centre_indices(grid, nu)
    return values[np.ix_(*([idx] * grid.n))] if grid.n > 1 else values[idx]


def _check_levels(grid, nu_max, samples=4):
    step = 2.0 ** -nu_max / grid.h
    if step < samples - 1e-9 or abs(step - round(step)) > 1e-9:
        raise ResolutionTooSmall(
            f"level {nu_max} cubes need an integer number (>= {samples}) of samples per side")
    M = grid.T * 2.0 ** nu_max
    if abs(M - round(M)) > 1e-9:
        raise ResolutionTooSmall("the period must be an integer multiple of the coarsest cube side")


# ---------------------------------------------------------------------------
# atoms

def _derivative_symbol(grid, alpha):
    sym = np.ones(grid.shape, dtype=complex)
    for i, a in enumerate(alpha):
        if a:
            sym = sym * (1j * grid.xi[..., i]) ** a
    return sym


def _spectral_derivative(f, alpha):
    if not any(alpha):
        return f.values
    return apply_multiplier(f, _derivative_symbol(f.grid, alpha)).values


def _multi_indices(n, order):
    """All multi-indices with ``|alpha| <= order``, by increasing length."""
    out = [a for a in product(range(order + 1), repeat=n) if sum(a) <= order]
    return sorted(out, key=lambda a: (sum(a), a[::-1]))


def _binom_multi(alpha, beta):
    out = 1
    for a, b in zip(alpha, beta):
        out *= comb(a, b)
    return out


class Atom:
    """A function localised to ``d Q_{nu,m}`` with its derivatives.

    Three flavours share the interface: sampled values (derivatives by
    spectral differentiation), a window times a smooth envelope (Leibniz
    rule with analytic window derivatives), and quarks (fully analytic).
    """

    def __init__(self, grid, nu, m, kind="sp_KL", K=1, L=-1, d=1.3, space=None):
        self.grid = grid
        self.nu = int(nu)
        self.m = tuple(int(v) for v in np.atleast_1d(m))
        if len(self.m) != grid.n:
            raise InvalidArgument("position index must have one entry per dimension")
        self.kind = kind
        self.K = int(K)
        self.L = int(L)
        self.d = float(d)
        self.space = space
        self._deriv = None

    @classmethod
    def from_values(cls, grid, nu, m, values, **kw):
        a = cls(grid, nu, m, **kw)
        f = values if isinstance(values, GridFunction) else GridFunction(grid, values)
        a.space = f.space
        a._deriv = lambda alpha: _spectral_derivative(f, alpha)
        return a

    @classmethod
    def windowed(cls, window, nu, m, envelope, scale=1.0, **kw):
        """``scale * psi(2^nu x - m) * envelope(x)``."""
        grid = envelope.grid
        a = cls(grid, nu, m, d=window.d, space=envelope.space, **kw)
        z = a._local()

        def deriv(alpha):
            out = np.zeros(grid.shape + (envelope.space.dim,), dtype=complex)
            for beta in _multi_indices(grid.n, sum(alpha)):
                if any(b > al for b, al in zip(beta, alpha)):
                    continue
                w = np.ones(grid.shape)
                for i, b in enumerate(beta):
                    w = w * window.profile1d(z[..., i], b) * 2.0 ** (nu * b)
                if not np.any(w):
                    continue
                rest = tuple(al - b for al, b in zip(alpha, beta))
                out += _binom_multi(alpha, beta) * w[..., None] * _spectral_derivative(envelope, rest)
            return scale * out
        a._deriv = deriv
        return a

    @classmethod
    def quark(cls, window, gamma, L, nu, m, s, p, **kw):
        """``2^{-nu(s-n/p)} ((-Delta)^{(L+1)/2} psi^gamma)(2^nu x - m)``."""
        _check_L(L)
        grid = window.grid
        a = cls(grid, nu, m, L=L, d=window.d, **kw)
        amp = 2.0 ** (-nu * (s - _n_over_p(grid.n, p)))
        z = a._local()

        def deriv(alpha):
            v = quark_function(window, gamma, L, z, alpha) * 2.0 ** (nu * sum(alpha))
            return (amp * v)[..., None].astype(complex)
        a._deriv = deriv
        a.space = None
        return a

    def _local(self):
        """Local coordinates ``2^nu x - m`` using the periodic minimal image."""
        x = self.grid.points - 2.0 ** -self.nu * np.array(self.m, dtype=float)
        return self.grid.min_image_points(x) * 2.0 ** self.nu

    def derivative(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if self._deriv is None:
            return np.zeros(self.grid.shape + (1,), dtype=complex)
        return self._deriv(alpha)

    def values(self):
        return self.derivative((0,) * self.grid.n)

    def outside_support(self):
        z = self._local()
        return np.any(np.abs(z) >= self.d / 2 + 1e-12, axis=-1)


def _n_over_p(n, p):
    return 0.0 if np.isinf(p) else n / p


@dataclass
class AtomReport:
    support_leakage: float
    derivative_ratio: float
    derivative_ratios: dict
    moment_residual: float
    tol: float
    constant: float

    @property
    def support_ok(self):
        return self.support_leakage < 1e-10

    @property
    def derivatives_ok(self):
        return self.derivative_ratio <= self.constant * (1 + self.tol)

    @property
    def moments_ok(self):
        return self.moment_residual < 1e-8

    @property
    def passed(self):
        return self.support_ok and self.derivatives_ok and self.moments_ok

    def to_dict(self):
        return {"support_leakage": self.support_leakage, "derivative_ratio": self.derivative_ratio,
                "moment_residual": self.moment_residual, "constant": self.constant,
                "support_ok": self.support_ok, "derivatives_ok": self.derivatives_ok,
                "moments_ok": self.moments_ok, "passed": self.passed}


def validate_atom(a, prm, constant=1.0, tol=1e-8):
    """Measure support leakage, the derivative-size ratio and moment residuals.

    The derivative ratio is ``max_{|alpha|<=K} sup ||D^alpha a|| /
    2^{-nu(s-n/p)+|alpha| nu}`` (for ``1_K`` atoms the bound is
    ``2^{|alpha| nu}``); it passes when at most ``constant * (1 + tol)``.
    """
    g = a.grid
    vals = a.values()
    mag = np.sqrt(np.sum(np.abs(vals) ** 2, axis=-1))
    out = a.outside_support()
    leak = float(mag[out].max()) if out.any() else 0.0
    n_p = _n_over_p(g.n, prm.p)
    ratios = {}
    for alpha in _multi_indices(g.n, a.K):
        D = a.derivative(alpha)
        top = float(np.sqrt(np.sum(np.abs(D) ** 2, axis=-1)).max())
        level = 0.0 if a.kind == "1_K" else -a.nu * (prm.s - n_p)
        ratios[alpha] = top / 2.0 ** (level + sum(alpha) * a.nu)
    moment = 0.0
    if a.L >= 0:
        z = a._local() * 2.0 ** -a.nu
        for beta in _multi_indices(g.n, a.L):
            w = np.prod(z ** np.array(beta), axis=-1)
            val = np.abs(np.sum(vals * w[..., None], axis=tuple(range(g.n))) * g.cell_volume)
            moment = max(moment, float(val.max()))
    return AtomReport(leak, max(ratios.values()), ratios, moment, tol, constant)


# ---------------------------------------------------------------------------
# harmonic atomic representation

@dataclass(eq=False)
class AtomicRepresentation:
    """``f = sum_{nu,m} lambda_{nu,m} a_{nu,m}`` with harmonic atoms.

    Level ``nu`` atoms are ``lambda^{-1} psi(2^nu x - m) F_nu(x)``; the
    envelopes ``F_nu`` are stored once per level.
    """

    prm: SpaceParams
    grid: object
    window: object
    mu: int
    nu_max: int
    k: int
    coefficients: CoefficientField
    envelopes: dict = field(repr=False)

    def atom(self, nu, m, K=None):
        lam = self.coefficients[nu, m]
        if lam == 0:
            raise DegenerateInput(f"no atom stored at level {nu}, position {m}")
        K = self.prm.K_value if K is None else K
        kind = "1_K" if nu == 0 else "sp_KL"
        return Atom.windowed(self.window, nu, m, self.envelopes[nu], 1.0 / lam, kind=kind, K=K, L=-1)

    def atoms(self, K=None):
        for (nu, m), _ in self.coefficients.items():
            yield self.atom(nu, m, K)

    def with_coefficients(self, coefficients):
        return AtomicRepresentation(self.prm, self.grid, self.window, self.mu, self.nu_max,
                                    self.k, coefficients, self.envelopes)

    def metadata(self):
        return {"kind": "atomic", "prm": self.prm.to_dict(), "mu": self.mu, "nu_max": self.nu_max,
                "k": self.k, "window": self.window.metadata(), "grid": self.grid.to_dict()}


def _check_decomposition(prm, grid, mu):
    n = grid.n
    if not prm.p > n / (n + 1):
        raise InvalidArgument(f"decomposition needs p > n/(n+1) = {n / (n + 1):g}")
    if not prm.s > prm.sigma:
        raise InvalidArgument(f"decomposition needs s > sigma = {prm.sigma:g} (s = {prm.s})")
    if int(mu) != mu or mu < MU_MIN:
        raise InvalidArgument(f"mu must be an integer >= {MU_MIN}, got {mu}")


def _t_samples(lo, hi, spacing):
    count = max(2, int(np.ceil((hi - lo) / spacing)) + 1)
    return np.linspace(lo, hi, count)


def _poisson_norms(f, t, order):
    r = f.grid.abs_xi
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = order * np.log(r) - t * r if order else -t * r
    mult = np.zeros_like(r)
    live = expo > -700.0
    mult[live] = np.exp(expo[live])
    return apply_multiplier(f, mult).norms()


def _ball_sup(A, grid, radius, nu):
    from .grid import _ball_max
    w = int(np.floor(radius / grid.h + 1e-9))
    return _sample_centres(_ball_max(A, grid, w), grid, nu)


def harmonic_decompose(f, prm, window, nu_max=6, mu=None, k=None, sup_box=SUP_BOX):
    """Harmonic atomic decomposition of ``f`` on levels ``mu..nu_max``.

    Coefficients take the supremum of the Poisson derivatives over the
    prescribed space-time boxes, sampled at three times the natural
    resolution ``2^-nu`` in t and on the grid in space.
    """
    mu = prm.mu if mu is None else mu
    _check_decomposition(prm, f.grid, mu)
    if nu_max < mu:
        raise InvalidArgument(f"nu_max = {nu_max} must be at least mu = {mu}")
    if window.grid != f.grid:
        raise InvalidArgument("window and function live on different grids")
    if sup_box < 4.0 / 3.0:
        raise InvalidArgument("the supremum box constant must be at least 4/3")
    g = f.grid
    _check_levels(g, nu_max)
    k = prm.k if k is None else int(k)
    n_p = _n_over_p(g.n, prm.p)
    r = g.abs_xi
    lam = CoefficientField.for_grid(g)
    env = {}
    # level mu: boundary terms at t = 1
    cl = boundary_constants(k)
    mult = sum(c * (-r) ** l for l, c in enumerate(cl)) * np.exp(-r)
    env[mu] = apply_multiplier(f, mult)
    ts = _t_samples(1.0 / (2 * sup_box), 1.5 * sup_box, 2.0 ** -mu / 3)
    coef = np.zeros((lam.size(mu),) * g.n)
    for l, c in enumerate(cl):
        A = np.max([_poisson_norms(f, t, l) for t in ts], axis=0)
        coef = coef + abs(c) * _ball_sup(A, g, sup_box, mu)
    lam.levels[mu] = coef.astype(complex)
    c = integral_constant(k)
    for nu in range(mu + 1, nu_max + 1):
        lo, hi = _level_t_range(nu, mu)
        env[nu] = apply_multiplier(f, c * _panel_multiplier(r, k, lo, hi))
        ts = _t_samples(lo / sup_box, hi * sup_box, 2.0 ** -nu / 3)
        A = np.max([_poisson_norms(f, t, k) for t in ts], axis=0)
        sup = _ball_sup(A, g, sup_box * 2.0 ** (mu - nu - 1), nu)
        lam.levels[nu] = (2.0 ** (nu * (prm.s - n_p) - nu * k) * sup).astype(complex)
    if np.any(f.values) and lam.is_zero():
        raise InternalInconsistency("all suprema vanish for a nonzero function")
    return AtomicRepresentation(prm, g, window, mu, nu_max, k, lam, env)


def _ratio_field(new, old):
    out = np.zeros_like(old, dtype=complex)
    live = old != 0
    out[live] = new[live] / old[live]
    return out


def reconstruct_atomic(rep, coefficients=None):
    """``sum lambda_{nu,m} a_{nu,m}`` over the stored entries, optionally with
    replacement coefficients for the same atom library."""
    g = rep.grid
    lam = rep.coefficients if coefficients is None else coefficients
    if lam.n != g.n or lam.T != g.T:
        raise InvalidArgument("coefficient field does not match the representation grid")
    space = next(iter(rep.envelopes.values())).space if rep.envelopes else None
    total = np.zeros(g.shape + ((space.dim if space else 1),), dtype=complex)
    for nu, F in sorted(rep.envelopes.items()):
        if nu not in lam.levels:
            continue
        weights = _ratio_field(lam.levels[nu], rep.coefficients.levels[nu])
        if not np.any(weights):
            continue
        field_ = window_synthesis(g, nu, weights[..., None], rep.window)
        total += field_[..., :1] * F.values
    return GridFunction(g, total, space)


@lru_cache(maxsize=8)
def _local_means_kernels(grid, n_mom):
    return build_local_means(grid, n_mom)


def synthesis_bound_check(rep, coefficients=None, norm=None):
    """``||sum lambda a|| / ||lambda|seq||`` in the family norm and sequence space.

    ``norm`` maps a grid function to its space norm; by default the
    local-means norm for ``rep.prm`` is used.
    """
    lam = rep.coefficients if coefficients is None else coefficients
    prm = rep.prm
    seq = seq_norm_b(lam, prm.p, prm.q) if prm.family == "B" else seq_norm_f(lam, prm.p, prm.q, rep.grid)
    if seq == 0:
        raise DegenerateInput("synthesis check needs a nonzero coefficient field")
    f = reconstruct_atomic(rep, lam)
    if norm is None:
        kern = _local_means_kernels(rep.grid, prm.n_mom)
        norm = lambda h: local_means_norm(h, kern, prm)  # noqa: E731
    return norm(f) / seq


# ---------------------------------------------------------------------------
# quarks

def _gamma_list(n, gamma_max):
    return _multi_indices(n, gamma_max)


def _gamma_fact(gamma):
    out = 1
    for g in gamma:
        out *= factorial(g)
    return out


@dataclass(eq=False)
class QuarkRepresentation:
    """``f = sum_gamma sum_{nu,m} rho^gamma e^gamma (gamma qu) + lambda^gamma e^{gamma,L} (gamma qu)^L``.

    The coefficient vectors ``V = lambda e`` are stored per ``(gamma, nu)``
    as arrays of shape ``(M_nu,)*n + (d,)``; ``rho`` terms use L = -1
    quarks with smoothness ``s_rho``.
    """

    prm: SpaceParams
    grid: object
    window: object
    L: int
    gamma_max: int
    mu: int
    nu_max: int
    lam_vectors: dict = field(default_factory=dict)
    rho_vectors: dict = field(default_factory=dict)
    s_rho: float = None
    space: object = None

    def _split(self, vectors):
        lam, dirs = {}, {}
        for (gamma, nu), V in vectors.items():
            mag = self.space.norms(V)
            e = np.zeros_like(V)
            live = mag > 0
            e[live] = V[live] / mag[live][..., None]
            e[~live, 0] = 1.0          # fixed unit vector where the coefficient vanishes
            lam.setdefault(gamma, CoefficientField(self.grid.n, self.grid.T)).levels[nu] = mag.astype(complex)
            dirs.setdefault(gamma, {})[nu] = e
        return lam, dirs

    @property
    def lam(self):
        return self._split(self.lam_vectors)[0]

    @property
    def rho(self):
        return self._split(self.rho_vectors)[0]

    def directions(self, which="lam"):
        return self._split(self.lam_vectors if which == "lam" else self.rho_vectors)[1]

    def gamma_sup(self, which="lam"):
        """``max_{nu,m} lambda^gamma_{nu,m}`` per ``|gamma|``."""
        vectors = self.lam_vectors if which == "lam" else self.rho_vectors
        out = {}
        for (gamma, nu), V in vectors.items():
            top = float(self.space.norms(V).max()) if V.size else 0.0
            g = sum(gamma)
            out[g] = max(out.get(g, 0.0), top)
        return dict(sorted(out.items()))

    def decay_norms(self, p=None, q=None):
        """``2^{mu |gamma|} (||rho^gamma|b|| + ||lambda^gamma|b||)`` per gamma."""
        p = self.prm.p if p is None else p
        q = self.prm.q if q is None else q
        lam, rho = self.lam, self.rho
        out = {}
        for gamma in set(lam) | set(rho):
            v = sum(seq_norm_b(x[gamma], p, q) for x in (lam, rho) if gamma in x)
            out[gamma] = 2.0 ** (self.mu * sum(gamma)) * v
        return out

    def metadata(self):
        return {"kind": "quark", "prm": self.prm.to_dict(), "L": self.L, "gamma_max": self.gamma_max,
                "mu": self.mu, "nu_max": self.nu_max, "s_rho": self.s_rho,
                "window": self.window.metadata(), "grid": self.grid.to_dict(),
                "space": self.space.to_dict()}


def _taylor_t_integrals(t0, width, k, beta_max):
    """``J_beta = int_{t0}^{t0+width} (t - t0)^beta t^{k-1} dt`` for beta <= beta_max."""
    out = []
    for beta in range(beta_max + 1):
        out.append(sum(comb(k - 1, j) * t0 ** (k - 1 - j) * width ** (beta + j + 1) / (beta + j + 1)
                       for j in range(k)))
    return np.array(out)


def _band_mask(f):
    """Lattice points inside the effective band of ``f``; outside it the
    coefficients are round-off, which high-order derivatives would amplify."""
    key = ("band_mask",)
    if key not in f.memo:
        f.memo[key] = f.grid.abs_xi <= _effective_radius(f)
    return f.memo[key]


def _mixed_derivative(f, gamma, t, order):
    """``D_x^gamma d_t^order u(x, t)`` sampled on the grid."""
    g = f.grid
    r = g.abs_xi
    sym = np.where(_band_mask(f), (-r) ** order * np.exp(-t * r), 0.0)
    return apply_multiplier(f, sym * _derivative_symbol(g, gamma)).values


def _quark_vectors(f, s, p, window, gamma_max, mu, nu_max, k, drop_top=False):
    """Coefficient vectors ``V^gamma_{nu,m}`` of the Taylor-expanded harmonic
    representation, truncated at ``|gamma| + beta <= gamma_max``."""
    g = f.grid
    n_p = _n_over_p(g.n, p)
    top = gamma_max - 1 if drop_top else gamma_max
    out = {}
    r = g.abs_xi
    cl = boundary_constants(k)
    boundary = np.where(_band_mask(f), sum(c * (-r) ** l for l, c in enumerate(cl)) * np.exp(-r), 0.0)
    for gamma in _gamma_list(g.n, top):
        D = apply_multiplier(f, boundary * _derivative_symbol(g, gamma)).values
        scale = 2.0 ** (mu * (s - n_p) - mu * sum(gamma)) / _gamma_fact(gamma)
        out[(gamma, mu)] = scale * _sample_centres(D, g, mu)
    c = integral_constant(k)
    for nu in range(mu + 1, nu_max + 1):
        width = 2.0 ** -nu
        lo = 2.0 ** (mu - nu)
        acc = {gamma: 0.0 for gamma in _gamma_list(g.n, top)}
        for l in range(2 ** mu):
            t0 = lo + l * width
            J = _taylor_t_integrals(t0, width, k, top)
            for gamma in acc:
                for beta in range(top - sum(gamma) + 1):
                    D = _mixed_derivative(f, gamma, t0, k + beta)
                    acc[gamma] = acc[gamma] + J[beta] / factorial(beta) * _sample_centres(D, g, nu)
        for gamma, v in acc.items():
            scale = c * 2.0 ** (nu * (s - n_p) - nu * sum(gamma)) / _gamma_fact(gamma)
            out[(gamma, nu)] = scale * v
    return out


def quark_decompose(f, prm, window, gamma_max=4, nu_max=6, mu=None, k=None, tol=None):
    """Subatomic decomposition with L = -1 quarks of smoothness ``prm.s``.

    Each harmonic atom is expanded in a Taylor series of the Poisson
    derivative about its box centres.  With ``tol`` the relative L2
    reconstruction error is checked: if it exceeds ``tol`` and does not
    improve on the expansion truncated one order earlier, the truncation
    is reported as a failure.
    """
    mu = prm.mu if mu is None else mu
    _check_decomposition(prm, f.grid, mu)
    if window.grid != f.grid:
        raise InvalidArgument("window and function live on different grids")
    if int(gamma_max) != gamma_max or gamma_max < 0:
        raise InvalidArgument(f"gamma_max must be a nonnegative integer, got {gamma_max}")
    _check_levels(f.grid, nu_max)
    k = prm.k if k is None else int(k)
    rep = QuarkRepresentation(prm, f.grid, window, -1, int(gamma_max), mu, nu_max, space=f.space)
    if not np.any(f.values):
        return rep
    rep.lam_vectors = _quark_vectors(f, prm.s, prm.p, window, gamma_max, mu, nu_max, k)
    if tol is not None:
        err = relative_error(reconstruct_quark(rep), f)
        if err > tol:
            coarse = QuarkRepresentation(prm, f.grid, window, -1, int(gamma_max) - 1, mu, nu_max,
                                         space=f.space)
            coarse.lam_vectors = _quark_vectors(f, prm.s, prm.p, window, gamma_max, mu, nu_max, k,
                                                drop_top=True)
            err0 = relative_error(reconstruct_quark(coarse), f)
            if err >= err0:
                raise TruncationFailure(
                    f"reconstruction error {err:.3e} exceeds {tol:g} and does not decrease "
                    f"from gamma_max - 1 ({err0:.3e})")
    return rep


def splitting_multipliers(grid, L, steps):
    """Symbols ``(m1, m2)`` with ``f = m1 f + (-Delta)^K m2 f``, ``K = (L+1)/2``.

    With ``rho = 1 - |xi|^{2K} (1+|xi|^2)^{-K}`` one has
    ``m1 = rho^steps`` and ``m2 = sum_{i<steps} rho^i (1+|xi|^2)^{-K}``.
    """
    _check_L(L)
    K = (L + 1) // 2
    r2 = grid.abs_xi ** 2
    if K == 0:
        return np.zeros(grid.shape), np.ones(grid.shape)
    lift = (1.0 + r2) ** -K
    rho = 1.0 - r2 ** K * lift
    m2 = sum(rho ** i for i in range(steps)) * lift
    return rho ** steps, m2


def quark_decompose_general(f, prm, M, window, gamma_max=4, nu_max=6, L=None, mu=None):
    """Quarkonial decomposition for arbitrary ``s``.

    ``f = f1 + (-Delta)^{(L+1)/2} f2``: ``f2`` has smoothness ``s + L + 1``
    and is decomposed there, so its quarks turn into ``(s,p)_L``-quarks;
    ``f1`` gains two orders per splitting step until it exceeds ``M`` and is
    decomposed with ``(M,p)_{-1}``-quarks.
    """
    L = prm.L_value if L is None else int(L)
    _check_L(L)
    sigma = prm.sigma
    if int(M) != M or not (M > sigma and M > prm.s):
        raise InvalidArgument(f"M = {M} must be an integer exceeding sigma = {sigma:g} and s = {prm.s}")
    if L < floor(sigma - prm.s):
        raise InvalidArgument(f"L = {L} violates L >= floor(sigma - s) = {floor(sigma - prm.s)}")
    mu = prm.mu if mu is None else mu
    g = f.grid
    K = (L + 1) // 2
    steps = 0 if K == 0 else max(1, int(np.ceil((M - prm.s) / 2.0)) + 1)
    m1, m2 = splitting_multipliers(g, L, steps)
    rep = QuarkRepresentation(prm, g, window, L, int(gamma_max), mu, nu_max,
                              s_rho=float(M), space=f.space)
    if not np.any(f.values):
        return rep
    f2 = apply_multiplier(f, m2)
    p2 = prm.with_(s=prm.s + L + 1, K=None, L=None)
    rep.lam_vectors = quark_decompose(f2, p2, window, gamma_max, nu_max, mu).lam_vectors
    if K:
        f1 = apply_multiplier(f, m1)
        p1 = prm.with_(s=float(M), K=None, L=None)
        rep.rho_vectors = quark_decompose(f1, p1, window, gamma_max, nu_max, mu).lam_vectors
    # 2^{-nu(s+L+1-n/p)} (-Delta)^K [psi^gamma(2^nu x - m)] is the (s,p)_L quark,
    # so the coefficients carry over unchanged
    return rep


def reconstruct_quark(rep, lam_vectors=None, rho_vectors=None):
    """Synthesis ``sum rho^gamma e^gamma (gamma qu) + lambda^gamma e^{gamma,L} (gamma qu)^L``."""
    g = rep.grid
    if rep.window.grid != g:
        raise InvalidArgument("window and representation live on different grids")
    lam_vectors = rep.lam_vectors if lam_vectors is None else lam_vectors
    rho_vectors = rep.rho_vectors if rho_vectors is None else rho_vectors
    dim = rep.space.dim if rep.space else 1
    total = np.zeros(g.shape + (dim,), dtype=complex)
    n_p = _n_over_p(g.n, rep.prm.p)
    for vectors, L, s in ((lam_vectors, rep.L, rep.prm.s), (rho_vectors, -1, rep.s_rho)):
        for (gamma, nu), V in vectors.items():
            if not np.any(V):
                continue
            amp = 2.0 ** (-nu * (s - n_p))
            prof = (lambda z, gamma=gamma, L=L: quark_function(rep.window, gamma, L, z))
            total += amp * window_synthesis(g, nu, V, prof)
    return GridFunction(g, total, rep.space)


def relative_error(approx, exact, p=2.0):
    ref = lp_norm_values(exact.norms(), exact.grid, p)
    diff = lp_norm_values(np.sqrt(np.sum(np.abs(approx.values - exact.values) ** 2, axis=-1)),
                          exact.grid, p)
    return diff / ref if ref > 0 else diff


# ---------------------------------------------------------------------------
# convergence of partial sums

@dataclass
class ConvergenceReport:
    levels: list
    tails: list
    l2_tails: list
    kappa_est: float

    def to_dict(self):
        return {"levels": self.levels, "tails": self.tails, "l2_tails": self.l2_tails,
                "kappa_est": self.kappa_est}


def _test_functions(grid, count=4):
    x = grid.points
    out = []
    for i in range(count):
        c = np.zeros(grid.n)
        c[0] = (i - count / 2) * 0.7
        out.append(np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * (0.5 + 0.25 * i) ** 2)))
    return out


def _level_contributions(rep):
    """Per level, the field ``sum_m`` of that level's terms."""
    g = rep.grid
    out = {}
    if isinstance(rep, AtomicRepresentation):
        for nu in sorted(rep.envelopes):
            lam = rep.coefficients.levels.get(nu)
            if lam is None:
                continue
            out[nu] = reconstruct_atomic(rep, CoefficientField(g.n, g.T, {nu: lam})).values
        return out
    for nu in range(rep.mu, rep.nu_max + 1):
        lv = {key: V for key, V in rep.lam_vectors.items() if key[1] == nu}
        rv = {key: V for key, V in rep.rho_vectors.items() if key[1] == nu}
        if lv or rv:
            out[nu] = reconstruct_quark(rep, lv, rv).values
    return out


def convergence_check(rep, fail=True):
    """Tails ``sum_{nu > J}`` of the representation, measured by pairings
    with fixed Gaussian test functions, and their geometric decay rate
    ``kappa_est`` (``tail_J ~ 2^{-J kappa}``)."""
    g = rep.grid
    parts = _level_contributions(rep)
    if not parts:
        return ConvergenceReport([], [], [], float("inf"))
    tests = _test_functions(g)
    levels = sorted(parts)
    tails, l2 = [], []
    for J in levels:
        rest = sum((parts[nu] for nu in levels if nu > J), np.zeros_like(parts[levels[0]]))
        pair = max(float(np.abs(np.sum(rest * w[..., None], axis=tuple(range(g.n)))).max())
                   * g.cell_volume for w in tests)
        tails.append(pair)
        l2.append(lp_norm_values(np.sqrt(np.sum(np.abs(rest) ** 2, axis=-1)), g, 2.0))
    live = [(J, t) for J, t in zip(levels, tails) if t > 0]
    if len(live) >= 2:
        J = np.array([a for a, _ in live], dtype=float)
        y = np.log2([b for _, b in live])
        kappa = float(-np.polyfit(J, y, 1)[0])
    else:
        kappa = float("inf")
    if fail and len(live) >= 2 and not kappa > 0:
        raise ConvergenceFailure(f"partial-sum tails do not decay (kappa_est = {kappa:.3g})")
    return ConvergenceReport(levels, tails, l2, kappa)
