"""
Quarks: one shape, many moments
===============================

The same bump is decomposed into quarks, translated and dilated copies of
x^gamma psi(x).  Coefficients fall off geometrically in |gamma|, so a few
moments already reproduce the function.  For negative smoothness the
function is split with a lift and the second part is built from quarks with
vanishing moments.
"""

import numpy as np

from besovkit.corpus import smooth_bumps
from besovkit.decomposition import (harmonic_decompose, quark_decompose, quark_decompose_general,
                                    reconstruct_atomic, reconstruct_quark, relative_error)
from besovkit.grid import Grid
from besovkit.kernels import build_partition_window
from besovkit.norms import SpaceParams

grid = Grid(1, 4096, 16.0)
window = build_partition_window(grid)
prm = SpaceParams(1.0, 2.0, 2.0)
f = smooth_bumps(grid, 2)[1][1]

# the untruncated atomic sum is what the Taylor series in gamma converges to
atomic = reconstruct_atomic(harmonic_decompose(f, prm, window, nu_max=6))
print("Gamma   error vs f     error vs atomic sum")
for G in range(0, 7):
    rep = quark_decompose(f, prm, window, gamma_max=G, nu_max=6)
    rec = reconstruct_quark(rep)
    print(f"{G:>5}   {relative_error(rec, f):.3e}      {relative_error(rec, atomic):.3e}")

sup = rep.gamma_sup()
print("\nlargest coefficient per |gamma|:")
for g, v in sup.items():
    print(f"  |gamma| = {g}: {v:.3e}")
ks = np.array(sorted(sup))
ratio = 2.0 ** np.polyfit(ks, np.log2([sup[k] for k in ks]), 1)[0]
print(f"fitted decay ratio per order: {ratio:.3f}")

# negative smoothness: f = f1 + (-Delta) f2, with L = 1 quarks for f2
neg = SpaceParams(-0.5, 2.0, 2.0)
gen = quark_decompose_general(f, neg, 2, window, gamma_max=4, nu_max=6, L=1)
print(f"\ns = -0.5: {len(gen.lam_vectors)} quark families, {len(gen.rho_vectors)} lift families, "
      f"error {relative_error(reconstruct_quark(gen), f):.3e}")
