"""
Atoms from the Poisson extension
================================

A smooth bump is written as a sum of atoms. Each level collects the Poisson
derivatives of the function over one dyadic time panel; the coefficients are
suprema of those derivatives over space-time boxes. Adding levels shrinks the
reconstruction error, and the atoms obey size bounds with a constant that
does not depend on the level.
"""

import numpy as np

from besovkit.corpus import smooth_bumps
from besovkit.decomposition import (convergence_check, harmonic_decompose, reconstruct_atomic,
                                    relative_error, synthesis_bound_check, validate_atom)
from besovkit.grid import Grid
from besovkit.kernels import build_partition_window
from besovkit.norms import SpaceParams

# 2^-nu cubes must hold an integer number (>= 4) of samples up to nu = 6
grid = Grid(1, 4096, 16.0)
window = build_partition_window(grid)
prm = SpaceParams(1.0, 2.0, 2.0)
name, f = smooth_bumps(grid, 1)[0]

print("deepest level   relative L2 error")
for nu_max in (3, 4, 5, 6):
    rep = harmonic_decompose(f, prm, window, nu_max=nu_max)
    print(f"{nu_max:>13}   {relative_error(reconstruct_atomic(rep), f):.3e}")

# coefficients per level and the geometric decay of the partial-sum tails
lam = rep.coefficients
for nu in sorted(lam.levels):
    a = np.abs(lam.levels[nu])
    print(f"level {nu}: {np.count_nonzero(a):4d} atoms, largest coefficient {a.max():.3e}")
report = convergence_check(rep)
print(f"tail decay rate kappa ~ {report.kappa_est:.2f}")

# the size constant of the largest atom on each level
print("\nlevel  derivative ratio of the largest atom")
for nu in range(rep.mu + 1, rep.nu_max + 1):
    i = int(np.argmax(np.abs(lam.levels[nu])))
    m = i - lam.size(nu) // 2
    print(f"{nu:>5}  {validate_atom(rep.atom(nu, m, K=1), prm).derivative_ratio:.4g}")

# synthesis: new coefficients on the same atom library
rng = np.random.default_rng(3)
ratios = []
for _ in range(10):
    new = lam.scaled(1.0)
    for nu in new.levels:
        new.levels[nu] = rng.normal(size=new.levels[nu].shape) * 2.0 ** (-nu)
    ratios.append(synthesis_bound_check(rep, new))
print(f"\n||sum lambda a|| / ||lambda|b|| over 10 random draws: {min(ratios):.3g} .. {max(ratios):.3g}")
