"""
Four ways to measure the same smoothness
========================================

A Gaussian, a modulated bump and a random band-limited field are measured
with the Fourier-analytic, local-means, Peetre-maximal and harmonic norms.
The numbers differ, but their ratios stay in a narrow band as the function
changes, which is what equivalence of norms means in practice.
"""

import numpy as np

from besovkit.corpus import band_limited
from besovkit.grid import Grid, GridFunction
from besovkit.norms import NORM_TAGS, SpaceParams, build_engines, compute_norm

grid = Grid(1, 4096, 40.0)
x = grid.points[..., 0]
rng = np.random.default_rng(7)

functions = {
    "gaussian": GridFunction(grid, np.exp(-x ** 2)),
    "modulated": GridFunction(grid, np.exp(-x ** 2 / 4) * np.cos(6 * x)),
    "random": band_limited(grid, 8.0, rng),
}

# kernels are built once per grid and shared by every norm
engines = build_engines(grid)
print(f"dyadic levels on this grid: J_max = {engines.sys.J_max}\n")

for prm in (SpaceParams(1.0, 2.0, 2.0), SpaceParams(0.5, 1.0, np.inf), SpaceParams(2.0, 2.0, 1.0, "F")):
    print(f"{prm.family}^{prm.s:g}_{prm.p:g},{prm.q:g}")
    table = {name: [compute_norm(t, f, prm, engines) for t in NORM_TAGS] for name, f in functions.items()}
    print("  " + "".join(f"{t:>14}" for t in ("function",) + NORM_TAGS))
    for name, vals in table.items():
        print("  " + f"{name:>14}" + "".join(f"{v:14.5g}" for v in vals))
    # ratio of each norm to the Fourier one, and its spread over the three functions
    ratios = np.array([[v / vals[0] for v in vals] for vals in table.values()])
    band = ratios.max(axis=0) / ratios.min(axis=0)
    print("  spread of ratio to fourier:" + "".join(f"{b:9.3f}" for b in band[1:]) + "\n")

# scaling the function scales every norm by the same factor
f = functions["modulated"]
prm = SpaceParams(1.0, 2.0, 2.0)
print("homogeneity, |c| = 3:", [round(compute_norm(t, f * 3.0, prm, engines) / compute_norm(t, f, prm, engines), 12)
                                for t in NORM_TAGS])
