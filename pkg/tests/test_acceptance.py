"""Acceptance suite: nine criteria at desk scale.

Property suites run on ``Grid(1, 4096, 40)`` and ``Grid(2, 256, 20)``.
Decompositions need an integer number of samples per dyadic cube, so they
use periods that are powers of two (``Grid(1, 4096, 16)`` and 2D grids
with ``T = 4`` or ``8``).  Moment residuals are measured on lattices that
resolve the kernel supports.

Each criterion prints one ``PASS``/``FAIL`` line; run this file directly to
see only those lines.
"""

import itertools
from functools import lru_cache

import numpy as np
import pytest

from besovkit.corpus import smooth_bumps, standard_corpus
from besovkit.decomposition import (Atom, convergence_check, harmonic_decompose, quark_decompose,
                                    quark_decompose_general, reconstruct_atomic, reconstruct_quark,
                                    relative_error, synthesis_bound_check, validate_atom)
from besovkit.grid import Grid, resample
from besovkit.inequalities import run_all
from besovkit.kernels import build_dyadic_system, build_local_means, build_partition_window, quark_profile
from besovkit.norms import (CoefficientField, SpaceParams, besov_norm, build_engines, harmonic_norms,
                            local_means_norm, peetre_norm, triebel_norm)

GRID = {1: Grid(1, 4096, 40.0), 2: Grid(2, 256, 20.0)}
S_VALUES, P_VALUES, Q_VALUES = (0.5, 1.0, 2.0), (1.0, 2.0), (1.0, 2.0, np.inf)
BAND = 50.0

RESULTS = {}


def record(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    RESULTS[k] = line
    print(line)
    return ok


def sweep_points(n, families="BF"):
    return [SpaceParams(s, p, q, fam, n=n)
            for fam in families for s in S_VALUES for p in P_VALUES for q in Q_VALUES]


@lru_cache(maxsize=None)
def engines(grid):
    return build_engines(grid)


@lru_cache(maxsize=None)
def corpus(grid, base=None):
    """The 20-function corpus; with ``base`` it is built there and resampled."""
    src = standard_corpus(base or grid, 0)
    return [(name, resample(f, grid) if base else f) for name, f in src]


# ---------------------------------------------------------------------------
# 1. resolution of unity

def check_resolution_of_unity(grid):
    sys_ = build_dyadic_system(grid)
    r = grid.abs_xi
    phis = [sys_.lattice(j).real for j in range(sys_.J_max + 1)]
    inside = r <= 2.0 ** (sys_.J_max - 1)
    residual = float(np.abs(sum(phis) - 1.0)[inside].max())
    support = not np.any(phis[0][r > 2.0])
    for j in range(1, sys_.J_max + 1):
        support &= not np.any(phis[j][(r < 2.0 ** (j - 1)) | (r > 2.0 ** (j + 1))])
    return residual, bool(support), sys_.J_max


def criterion_1():
    parts, ok = [], True
    for n, g in GRID.items():
        res, sup, J = check_resolution_of_unity(g)
        ok &= res < 1e-10 and sup
        parts.append(f"{n}D J_max={J} residual={res:.1e} supports={'exact' if sup else 'violated'}")
    return record(1, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 2. norm axioms

def five_norms(f, prms, eng):
    """Values of the five engines for each parameter set (family-appropriate)."""
    harm = harmonic_norms(f, prms, eng.phi)
    out = []
    for prm, h in zip(prms, harm):
        fourier = besov_norm(f, eng.sys, prm) if prm.family == "B" else triebel_norm(f, eng.sys, prm)
        out.append({"besov" if prm.family == "B" else "triebel": fourier,
                    "local_means": local_means_norm(f, eng.local_means(prm.n_mom), prm),
                    "peetre": peetre_norm(f, eng.Psi, eng.psi, prm),
                    "harmonic": h})
    return out


AXIOM_POINTS = {1: [(1.0, 2.0, 2.0), (0.5, 1.0, np.inf), (2.0, 1.0, 1.0)],
                2: [(1.0, 2.0, 2.0)]}


def check_axioms(n):
    g = GRID[n]
    eng = engines(g)
    prms = [SpaceParams(s, p, q, fam, n=n) for s, p, q in AXIOM_POINTS[n] for fam in "BF"]
    funcs = corpus(g)
    c = -2.5 + 1.5j
    base = {name: five_norms(f, prms, eng) for name, f in funcs}
    homog = 0.0
    for name, f in funcs:
        scaled = five_norms(f * c, prms, eng)
        for b, s_ in zip(base[name], scaled):
            for tag in b:
                homog = max(homog, abs(s_[tag] - abs(c) * b[tag]) / (abs(c) * b[tag]))
    # partners share the value space: each function with the next one of the same dimension
    by_dim = {}
    for name, f in funcs:
        by_dim.setdefault(f.space.dim, []).append(name)
    lookup = dict(funcs)
    tri = -np.inf
    for names in by_dim.values():
        for a, b in zip(names, names[1:] + names[:1]):
            if a == b:
                continue
            summed = five_norms(lookup[a] + lookup[b], prms, eng)
            for va, vb, vs in zip(base[a], base[b], summed):
                for tag in vs:
                    tri = max(tri, (vs[tag] - va[tag] - vb[tag]) / (va[tag] + vb[tag]))
    engines_seen = sorted({t for row in base[funcs[0][0]] for t in row})
    return homog, tri, engines_seen


def criterion_2():
    parts, ok = [], True
    for n in GRID:
        homog, tri, seen = check_axioms(n)
        ok &= homog < 1e-10 and tri <= 1e-10 and len(seen) == 5
        parts.append(f"{n}D homogeneity={homog:.1e} triangle excess={tri:.1e} engines={len(seen)}")
    return record(2, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 3. embeddings

def check_embeddings(n):
    g = GRID[n]
    sys_ = engines(g).sys
    worst = np.inf
    for _, f in corpus(g):
        for s in S_VALUES:
            for p in P_VALUES:
                B = {q: besov_norm(f, sys_, SpaceParams(s, p, q, "B", n=n)) for q in Q_VALUES}
                F = {q: triebel_norm(f, sys_, SpaceParams(s, p, q, "F", n=n)) for q in Q_VALUES}
                for fam in (B, F):
                    for q1, q2 in itertools.combinations(Q_VALUES, 2):
                        worst = min(worst, (fam[q1] - fam[q2]) / fam[q1])
                # B_{p,min(p,q)} >= F_{p,q} >= B_{p,max(p,q)}; both indices lie in Q_VALUES
                for q in Q_VALUES:
                    b_lo, b_hi = B[min(p, q)], B[max(p, q)]
                    worst = min(worst, (b_lo - F[q]) / b_lo, (F[q] - b_hi) / F[q])
    return worst


def criterion_3():
    parts, ok = [], True
    for n in GRID:
        m = check_embeddings(n)
        ok &= m >= -1e-10
        parts.append(f"{n}D worst relative margin={m:.1e}")
    return record(3, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 4. equivalence bands

TAGS4 = ("fourier", "local_means", "peetre", "harmonic")


def equivalence_bands(grid, base=None, names=None, families="BF"):
    eng = engines(grid)
    prms = sweep_points(grid.n, families)
    funcs = corpus(grid, base)
    if names is not None:
        funcs = [(nm, f) for nm, f in funcs if nm in names]
    values = {}
    for name, f in funcs:
        rows = five_norms(f, prms, eng)
        for i, row in enumerate(rows):
            row = dict(row)
            row["fourier"] = row.pop("besov") if "besov" in row else row.pop("triebel")
            values[name, i] = row
    bands = {}
    for i, prm in enumerate(prms):
        for a, b in itertools.combinations(TAGS4, 2):
            r = [values[nm, i][a] / values[nm, i][b] for nm, _ in funcs]
            bands[(prm.family, prm.s, prm.p, prm.q, a, b)] = max(r) / min(r)
    return bands


DOUBLING_SUBSET_2D = ("gauss0", "modulated1", "random0", "vector0", "two_scale")


def check_equivalence(n):
    g = GRID[n]
    bands = equivalence_bands(g)
    fine = Grid(n, 2 * g.N, g.T)
    if n == 1:
        coarse, doubled = bands, equivalence_bands(fine, base=g)
    else:
        coarse = equivalence_bands(g, names=DOUBLING_SUBSET_2D, families="B")
        doubled = equivalence_bands(fine, base=g, names=DOUBLING_SUBSET_2D, families="B")
    growth = max(doubled[k] / coarse[k] for k in coarse)
    return max(bands.values()), growth


def criterion_4():
    parts, ok = [], True
    for n in GRID:
        band, growth = check_equivalence(n)
        ok &= band <= BAND and growth <= 1.01
        parts.append(f"{n}D worst band={band:.2f} (limit {BAND:g}), band growth under N doubling={growth:.4f}")
    return record(4, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 5. moments and quark constants

MOMENT_GRIDS = {1: Grid(1, 8192, 8.0), 2: Grid(2, 2048, 2.5)}
QUARK_MOMENT_GRIDS = {(1, 1): Grid(1, 8192, 8.0), (1, 3): Grid(1, 8192, 8.0),
                      (2, 1): Grid(2, 1024, 2.0), (2, 3): Grid(2, 2048, 2.0)}


def _moment_residual(grid, values, order):
    x = grid.points
    w = grid.h ** grid.n
    res = 0.0
    for beta in itertools.product(range(order + 1), repeat=grid.n):
        if sum(beta) <= order:
            res = max(res, abs(np.sum(np.prod(x ** np.array(beta), axis=-1) * values) * w))
    return res


def kernel_moment_residual(n):
    g = MOMENT_GRIDS[n]
    orders = sorted({p.n_mom for p in sweep_points(n)})
    return max(_moment_residual(g, build_local_means(g, N).kN.values[..., 0].real, 2 * N - 1) for N in orders)


def quark_moment_residual(n):
    res = 0.0
    for L in (1, 3):
        g = QUARK_MOMENT_GRIDS[n, L]
        w = build_partition_window(g)
        gammas = [(0,), (1,), (3,)] if n == 1 else ([(0, 0), (1, 2)] if L == 1 else [(2, 1)])
        for gamma in gammas:
            vals = quark_profile(w, gamma, L).profile.values[..., 0].real
            res = max(res, _moment_residual(g, vals, L))
    return res


def quark_constants(n, gamma_top=None):
    g = GRID[n]
    w = build_partition_window(g)
    prm = SpaceParams(1.0, 2.0, 2.0, n=n)
    nu = 2 if n == 1 else 0
    gamma_top = gamma_top or (8 if n == 1 else 6)
    C = []
    for k in range(gamma_top + 1):
        best = 0.0
        for gamma in itertools.product(range(k + 1), repeat=n):
            if sum(gamma) != k:
                continue
            rep = validate_atom(Atom.quark(w, gamma, -1, nu, (0,) * n, prm.s, prm.p, K=2), prm)
            if not rep.support_ok:
                return None
            best = max(best, rep.derivative_ratio)
        C.append(best)
    y = np.log2(C)
    ks = np.arange(len(C))
    prefixes = [np.polyfit(ks[:m], y[:m], 1)[0] for m in range(4, len(C) + 1)]
    kappa, icpt = np.polyfit(ks, y, 1)
    envelope_gap = float(np.max(np.abs(y - (icpt + kappa * ks))))
    return float(kappa), float(np.ptp(prefixes)), envelope_gap


def criterion_5():
    parts, ok = [], True
    for n in GRID:
        km = kernel_moment_residual(n)
        qm = quark_moment_residual(n)
        kappa, spread, gap = quark_constants(n)
        ok &= km < 1e-8 and qm < 1e-8 and spread <= 0.1 and gap <= 1.0
        parts.append(f"{n}D k^N moments={km:.1e} quark moments={qm:.1e} kappa={kappa:.3f} "
                     f"(prefix spread {spread:.3f}, envelope gap {gap:.2f} bits)")
    return record(5, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 6. synthesis

SYNTH = {1: (Grid(1, 4096, 16.0), 5, sweep_points(1)),
         2: (Grid(2, 256, 4.0), 4, [SpaceParams(1.0, 2.0, 2.0, "B", n=2), SpaceParams(1.0, 2.0, 2.0, "F", n=2),
                                    SpaceParams(0.5, 1.0, np.inf, "B", n=2)])}


def random_coefficients(rng, grid, mu, nu_max):
    """Lognormal magnitudes with random phases, a random density and a random tilt across levels."""
    lam = CoefficientField.for_grid(grid)
    density = rng.uniform(0.01, 1.0)
    tilt = rng.uniform(-2.0, 2.0)
    for nu in range(mu, nu_max + 1):
        shape = (lam.size(nu),) * grid.n
        keep = rng.random(shape) < density
        mag = np.exp(rng.normal(0.0, 2.0, shape)) * 2.0 ** (tilt * nu)
        lam.levels[nu] = np.where(keep, mag * np.exp(2j * np.pi * rng.random(shape)), 0)
    if lam.is_zero():
        lam.levels[mu].flat[0] = 1.0
    return lam


def check_synthesis(n, draws=50):
    g, nu_max, prms = SYNTH[n]
    w = build_partition_window(g)
    f = smooth_bumps(g, 1)[0][1]
    spreads = {}
    for prm in prms:
        rep = harmonic_decompose(f, prm, w, nu_max=nu_max)
        rng = np.random.default_rng(0)
        r = [synthesis_bound_check(rep, random_coefficients(rng, g, rep.mu, nu_max)) for _ in range(draws)]
        spreads[prm] = (min(r), max(r))
    return spreads


def criterion_6():
    parts, ok = [], True
    for n in GRID:
        spreads = check_synthesis(n)
        worst = max(hi / lo for lo, hi in spreads.values())
        ok &= np.isfinite(worst) and worst < 100
        top = max(hi for _, hi in spreads.values())
        parts.append(f"{n}D {len(spreads)} parameter sets x 50 draws, worst spread={worst:.1f}, "
                     f"largest constant={top:.3g}")
    return record(6, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 7 and 9. round trips and convergence

ROUND = {1: dict(grid=Grid(1, 4096, 16.0), nu_max=6, bumps=5, gammas=(4, 6)),
         2: dict(grid=Grid(2, 512, 8.0), nu_max=4, bumps=1, gammas=(4,))}


@lru_cache(maxsize=None)
def round_trips(n):
    cfg = ROUND[n]
    g = cfg["grid"]
    w = build_partition_window(g)
    prm = SpaceParams(1.0, 2.0, 2.0, n=n)
    bumps = smooth_bumps(g, 2)[1:] if n == 2 else smooth_bumps(g, cfg["bumps"])
    out = []
    for name, f in bumps:
        row = {"name": name}
        rep = harmonic_decompose(f, prm, w, nu_max=cfg["nu_max"], mu=3)
        row["harmonic"] = relative_error(reconstruct_atomic(rep), f)
        row["harmonic_rep"] = rep
        for G in cfg["gammas"]:
            q = quark_decompose(f, prm, w, gamma_max=G, nu_max=cfg["nu_max"], mu=3)
            row[f"quark{G}"] = relative_error(reconstruct_quark(q), f)
            row[f"quark{G}_rep"] = q
        gen = quark_decompose_general(f, SpaceParams(-0.5, 2.0, 2.0, n=n), 2, w, gamma_max=4,
                                      nu_max=cfg["nu_max"], L=1, mu=3)
        row["general"] = relative_error(reconstruct_quark(gen), f)
        row["general_rep"] = gen
        out.append(row)
    return out


def criterion_7():
    parts, ok = [], True
    for n in GRID:
        rows = round_trips(n)
        worst = max(max(r["harmonic"], r["quark4"]) for r in rows)
        gen = max(r["general"] for r in rows)
        ok &= worst < 1e-2 and gen < 5e-2
        detail = f"{n}D harmonic/quark max error={worst:.2e}, general-s max error={gen:.2e}"
        if "quark6" in rows[0]:
            improves = all(r["quark6"] < r["quark4"] for r in rows)
            ok &= improves
            detail += f", Gamma 4->6 strictly improves: {improves}"
        parts.append(detail)
    return record(7, ok, "; ".join(parts))


def gamma_decay_ratio(rep):
    sup = rep.gamma_sup()
    ks = np.array(sorted(sup))
    return float(2.0 ** np.polyfit(ks, np.log2([sup[k] for k in ks]), 1)[0])


@lru_cache(maxsize=None)
def tails_2d():
    # two tail levels need nu_max - mu >= 2, which at nu_max = 4 means mu = 2
    g = ROUND[2]["grid"]
    f = smooth_bumps(g, 2)[1][1]
    return convergence_check(harmonic_decompose(f, SpaceParams(1.0, 2.0, 2.0, n=2),
                                                build_partition_window(g), nu_max=4, mu=2))


def criterion_9():
    parts, ok = [], True
    for n in GRID:
        rows = round_trips(n)
        G = max(ROUND[n]["gammas"])
        ratio = max(gamma_decay_ratio(r[f"quark{G}_rep"]) for r in rows)
        reps = [r[k] for r in rows for k in ("harmonic_rep", f"quark{G}_rep", "general_rep")]
        kappas = [convergence_check(rep, fail=False).kappa_est for rep in reps]
        if n == 2:
            kappas.append(tails_2d().kappa_est)
        finite = [k for k in kappas if np.isfinite(k)]
        ok &= ratio <= 0.75 and min(kappas) > 0 and bool(finite)
        parts.append(f"{n}D gamma decay ratio={ratio:.3f} (limit 0.75), "
                     f"min kappa_est={min(finite):.2f} over {len(finite)} fitted representations")
    return record(9, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 8. inequalities

def criterion_8():
    parts, ok = [], True
    for n, g in GRID.items():
        results = run_all(g)
        ok &= all(r.passed for r in results)
        worst = max(results, key=lambda r: r.spread)
        failed = [r.name for r in results if not r.passed]
        parts.append(f"{n}D {len(results)} properties, worst spread={worst.spread:.2f} ({worst.name})"
                     + (f", failed: {failed}" if failed else ""))
    return record(8, ok, "; ".join(parts))


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


@pytest.mark.acceptance
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    assert CRITERIA[k](), RESULTS[k]


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        CRITERIA[k]()
