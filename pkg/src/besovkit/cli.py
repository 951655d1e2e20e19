"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical
failure, 4 truncation failure.
"""

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .corpus import band_limited_family, smooth_bumps, spectral_radius, standard_corpus
from .decomposition import (AtomicRepresentation, harmonic_decompose, quark_decompose,
                            quark_decompose_general, reconstruct_atomic, reconstruct_quark,
                            relative_error, validate_atom, Atom)
from .errors import BesovkitError, NumericalFailure, TruncationFailure
from .grid import GridFunction
from .inequalities import run_all
from .io import (load_grid_function, load_representation, save_grid_function,
                 save_representation)
from .kernels import build_partition_window
from .norms import build_engines, compute_norm

log = logging.getLogger("besovkit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TRUNCATION = 0, 2, 3, 4


def _setup_logging():
    level = os.environ.get("BESOVKIT_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Output:
    """Serialised writer for tables and manifests in one directory."""

    def __init__(self, root, fmt):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt

    def table(self, name, columns, rows):
        if self.fmt == "json":
            path = self.root / f"{name}.json"
            data = [{c: (r[i] if not isinstance(r[i], np.generic) else r[i].item())
                     for i, c in enumerate(columns)} for r in rows]
            path.write_text(json.dumps(data, indent=1, default=_fmt) + "\n")
        else:
            path = self.root / f"{name}.csv"
            buf = _io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
            path.write_text(buf.getvalue())
        log.info("wrote %s", path)
        return path

    def manifest(self, data):
        path = self.root / "manifest.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_fmt) + "\n")
        return path


def _manifest(cfg, command, extra=None):
    d = {"command": command, "version": __version__, "config": cfg.to_dict()}
    d.update(extra or {})
    return d


def _load_inputs(paths):
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files += sorted(p.glob("*.bkgf"))
        else:
            files.append(p)
    return [(f.stem, load_grid_function(f)) for f in files]


def _corpus(cfg, grid, seed):
    c = cfg.corpus
    kind = c.get("kind", "standard")
    if kind == "standard":
        return standard_corpus(grid, seed)
    if kind == "bumps":
        return smooth_bumps(grid, int(c.get("count", 5)), seed)
    radius = c.get("radius") or spectral_radius(grid) / 4
    fam = band_limited_family(grid, float(radius), int(c.get("count", 20)), seed)
    return [(f"band{i}", f) for i, f in enumerate(fam)]


def _functions(args, cfg, grid, default="standard"):
    if args.input:
        funcs = _load_inputs(args.input)
        for name, f in funcs:
            if f.grid != grid:
                log.info("input %s uses its own grid %s", name, f.grid)
        return funcs
    if default == "bumps" and cfg.corpus.get("kind") == "standard":
        return smooth_bumps(grid, int(cfg.corpus.get("count", 5)), args.seed)
    return _corpus(cfg, grid, args.seed)


def _map(jobs, fn, items):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen_corpus(args, cfg, out):
    grid = cfg.make_grid()
    funcs = _corpus(cfg, grid, args.seed)
    rows = []
    for name, f in funcs:
        save_grid_function(f, out.root / f"{name}.bkgf")
        rows.append([name, f.space.dim, float(np.max(f.norms()))])
    out.table("corpus", ["function_id", "d", "sup_norm"], rows)
    out.manifest(_manifest(cfg, "gen-corpus", {"functions": [r[0] for r in rows]}))
    return EXIT_OK


def _engines_for(grid, cfg, cache):
    if grid not in cache:
        cache[grid] = build_engines(grid, cfg.kernels.get("J_max"))
    return cache[grid]


def cmd_norm(args, cfg, out):
    grid = cfg.make_grid()
    funcs = _functions(args, cfg, grid)
    prm_base = cfg.make_params()
    tags = list(cfg.norms)
    cache = {}
    for _, f in funcs:
        _engines_for(f.grid, cfg, cache)

    def work(item):
        name, f = item
        prm = prm_base.with_(n=f.grid.n)
        eng = cache[f.grid]
        if not np.any(f.values):
            return name, {t: 0.0 for t in tags}
        return name, {t: compute_norm(t, f, prm, eng) for t in tags}

    results = _map(args.jobs, work, funcs)
    rows = [[name, t, vals[t]] for name, vals in results for t in tags]
    ratios = [[name, a, b, vals[a] / vals[b]] for name, vals in results
              for a, b in combinations(tags, 2) if vals[b] > 0]
    out.table("norms", ["function_id", "norm_tag", "value"], rows)
    out.table("ratios", ["function_id", "tag_a", "tag_b", "ratio"], ratios)
    meta = {g.to_dict()["N"]: e.metadata() for g, e in cache.items()}
    out.manifest(_manifest(cfg, "norm", {"params": prm_base.to_dict(), "engines": meta}))
    return EXIT_OK


def _decompose(f, cfg, prm, window):
    dec = cfg.decomposition
    mu, nu_max, gam = int(dec["mu"]), int(dec["nu_max"]), int(dec["gamma_max"])
    k = dec.get("k_poisson")
    if dec["kind"] == "atomic":
        rep = harmonic_decompose(f, prm, window, nu_max, mu, k)
        return rep, reconstruct_atomic(rep)
    if dec["kind"] == "quark":
        tol = dec.get("tolerance")
        rep = quark_decompose(f, prm, window, gam, nu_max, mu, k, tol=tol)
        return rep, reconstruct_quark(rep)
    rep = quark_decompose_general(f, prm, int(dec["M"]), window, gam, nu_max, dec.get("L"), mu)
    return rep, reconstruct_quark(rep)


def cmd_decompose(args, cfg, out):
    grid = cfg.make_grid()
    funcs = _functions(args, cfg, grid, default="bumps")
    prm = cfg.make_params()
    windows = {}

    def work(item):
        name, f = item
        if f.grid not in windows:
            windows[f.grid] = build_partition_window(f.grid, float(cfg.kernels.get("d_support", 1.3)))
        rep, rec = _decompose(f, cfg, prm.with_(n=f.grid.n), windows[f.grid])
        err = relative_error(rec, f) if np.any(f.values) else 0.0
        return name, rep, err

    results = _map(args.jobs, work, funcs)
    rows = []
    for name, rep, err in results:
        save_representation(rep, out.root / f"{name}.bkrp")
        save_grid_function(dict(funcs)[name], out.root / f"{name}.bkgf")
        rows.append([name, cfg.decomposition["kind"], err])
    out.table("decompose", ["function_id", "kind", "relative_l2_error"], rows)
    out.manifest(_manifest(cfg, "decompose", {"params": prm.to_dict()}))
    return EXIT_OK


def cmd_reconstruct(args, cfg, out):
    if not args.rep:
        raise_config("reconstruct needs at least one --rep file")
    originals = dict(_load_inputs(args.input)) if args.input else {}
    p = float(args.p)
    rows = []
    for path in args.rep:
        path = Path(path)
        rep = load_representation(path)
        rec = reconstruct_atomic(rep) if isinstance(rep, AtomicRepresentation) else reconstruct_quark(rep)
        save_grid_function(rec, out.root / f"{path.stem}.reconstructed.bkgf")
        f = originals.get(path.stem)
        if f is None:
            sibling = path.with_suffix(".bkgf")
            f = load_grid_function(sibling) if sibling.exists() else None
        if f is None:
            err = float("nan")
        elif np.any(f.values):
            err = relative_error(rec, f, p)
        else:
            err = float(np.max(rec.norms()))
        rows.append([path.stem, err])
    out.table("reconstruct", ["function_id", f"relative_l{p:g}_error"], rows)
    out.manifest(_manifest(cfg, "reconstruct", {"representations": [str(r) for r in args.rep]}))
    return EXIT_OK


def cmd_sweep(args, cfg, out):
    points = cfg.sweep_points()
    if not points:
        raise_config("the sweep grid is empty")
    grid = cfg.make_grid()
    funcs = _functions(args, cfg, grid)
    eng = build_engines(grid, cfg.kernels.get("J_max"))
    tags = list(cfg.norms)
    band = float(cfg.sweep.get("band", 50.0))
    from .norms import harmonic_norms

    def work(item):
        name, f = item
        vals = {}
        harm = harmonic_norms(f, points, eng.phi) if "harmonic" in tags else None
        for i, prm in enumerate(points):
            for t in tags:
                vals[(i, t)] = harm[i] if t == "harmonic" else compute_norm(t, f, prm, eng)
        return name, vals

    results = _map(args.jobs, work, funcs)
    values, table = [], []
    worst = 1.0
    for i, prm in enumerate(points):
        key = [prm.family, prm.s, prm.p, prm.q]
        for name, vals in results:
            for t in tags:
                values.append(key + [name, t, vals[(i, t)]])
        pairs = list(combinations(tags, 2)) or [(tags[0], tags[0])]
        for a, b in pairs:
            r = [vals[(i, a)] / vals[(i, b)] for _, vals in results]
            lo, hi = min(r), max(r)
            table.append(key + [a, b, lo, hi, hi / lo, hi / lo > band])
            worst = max(worst, hi / lo)
    table.append(["summary", "", "", "", "", "", "", "", worst, worst > band])
    out.table("sweep_values", ["family", "s", "p", "q", "function_id", "norm_tag", "value"], values)
    out.table("sweep_bands", ["family", "s", "p", "q", "tag_a", "tag_b", "min_ratio", "max_ratio",
                              "band", "exceeds"], table)
    out.manifest(_manifest(cfg, "sweep", {"engines": eng.metadata(), "points": len(points),
                                          "worst_band": worst}))
    return EXIT_OK


def cmd_validate_atoms(args, cfg, out):
    grid = cfg.make_grid()
    funcs = _functions(args, cfg, grid, default="bumps")
    prm = cfg.make_params()
    dec = cfg.decomposition
    window = build_partition_window(grid, float(cfg.kernels.get("d_support", 1.3)))
    rows = []
    for name, f in funcs:
        rep = harmonic_decompose(f, prm, window, int(dec["nu_max"]), int(dec["mu"]), dec.get("k_poisson"))
        for nu, lam in sorted(rep.coefficients.levels.items()):
            if not np.any(lam):
                continue
            i = np.unravel_index(np.argmax(np.abs(lam)), lam.shape)
            m = [j - lam.shape[0] // 2 for j in i]
            r = validate_atom(rep.atom(nu, m), prm)
            rows.append([name, "harmonic", nu, " ".join(map(str, m)), "", r.support_leakage,
                         r.derivative_ratio, r.moment_residual, r.support_ok and r.moments_ok])
    for g in range(int(dec["gamma_max"]) + 1):
        gamma = (g,) + (0,) * (grid.n - 1)
        a = Atom.quark(window, gamma, -1, 2, (0,) * grid.n, prm.s, prm.p, K=prm.K_value)
        r = validate_atom(a, prm)
        rows.append(["quark", "quark", 2, " ".join(["0"] * grid.n), g, r.support_leakage,
                     r.derivative_ratio, r.moment_residual, r.support_ok and r.moments_ok])
    out.table("atoms", ["function_id", "kind", "nu", "m", "gamma", "support_leakage",
                        "derivative_ratio", "moment_residual", "passed"], rows)
    out.manifest(_manifest(cfg, "validate-atoms", {"params": prm.to_dict()}))
    return EXIT_OK


def cmd_test_inequalities(args, cfg, out):
    grid = cfg.make_grid()
    results = run_all(grid, seed=args.seed)
    rows = [[r.name, min(r.constants), r.max_constant, r.spread, r.passed] for r in results]
    out.table("inequalities", ["property", "min_constant", "max_constant", "spread", "passed"], rows)
    out.manifest(_manifest(cfg, "test-inequalities"))
    return EXIT_OK


COMMANDS = {
    "norm": cmd_norm,
    "decompose": cmd_decompose,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "validate-atoms": cmd_validate_atoms,
    "test-inequalities": cmd_test_inequalities,
    "gen-corpus": cmd_gen_corpus,
}


class ConfigError(Exception):
    pass


def raise_config(msg):
    raise ConfigError(msg)


def build_parser():
    parser = argparse.ArgumentParser(prog="besovkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the configuration)")
    common.add_argument("--seed", type=int, help="corpus seed (overrides the configuration)")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for corpus entries")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--input", action="append", default=[],
                        help="grid-function file or directory of .bkgf files (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "reconstruct":
            p.add_argument("--rep", action="append", default=[], help="representation file (repeatable)")
            p.add_argument("--p", default="2", help="exponent of the reported L_p error")
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig().validate()
        if args.seed is None:
            args.seed = int(cfg.corpus.get("seed", 0))
        elif args.seed < 0:
            raise_config("--seed must be nonnegative")
        else:
            cfg.corpus["seed"] = args.seed
        if args.jobs < 1:
            raise_config("--jobs must be at least 1")
        if args.out:
            cfg.output = args.out
        out = Output(cfg.output, args.format)
        return COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"besovkit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationFailure as exc:
        print(f"besovkit: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except NumericalFailure as exc:
        print(f"besovkit: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BesovkitError as exc:
        print(f"besovkit: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"besovkit: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
