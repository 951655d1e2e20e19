"""Binary containers for grid functions and representations.

Both formats start with a 4-byte magic, a little-endian u32 version and a
u32 header length, followed by a UTF-8 JSON header and a block of
little-endian float64 values.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .decomposition import AtomicRepresentation, QuarkRepresentation
from .errors import InvalidArgument
from .grid import Grid, GridFunction
from .kernels import build_partition_window
from .norms import CoefficientField, SpaceParams
from .value_space import ValueSpace

GRID_MAGIC = b"BKGF"
REP_MAGIC = b"BKRP"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


def _pack(magic, header, data):
    blob = json.dumps(header, sort_keys=True).encode()
    return _PREFIX.pack(magic, VERSION, len(blob)) + blob + np.ascontiguousarray(data, dtype="<f8").tobytes()


def _unpack(raw, magic):
    if len(raw) < _PREFIX.size:
        raise InvalidArgument("file too short for a besovkit container")
    got, version, size = _PREFIX.unpack_from(raw)
    if got != magic:
        raise InvalidArgument(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise InvalidArgument(f"unsupported container version {version}")
    try:
        header = json.loads(raw[_PREFIX.size:_PREFIX.size + size].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidArgument(f"corrupt container header: {exc}") from None
    body = raw[_PREFIX.size + size:]
    if len(body) % 8:
        raise InvalidArgument("container body is not a whole number of float64 values")
    return header, np.frombuffer(body, dtype="<f8")


def _complex_pairs(values):
    v = np.asarray(values, dtype=complex)
    return np.stack([v.real, v.imag], axis=-1)


def _from_pairs(arr, shape):
    arr = arr.reshape(shape + (2,))
    return arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------------------
# grid functions

def _grid_header(f):
    g, E = f.grid, f.space
    return {"n": g.n, "N": g.N, "T": g.T, "d": E.dim, "r": E.r, "norm_kind": E.norm_kind}


def grid_function_bytes(f):
    return _pack(GRID_MAGIC, _grid_header(f), _complex_pairs(f.values))


def grid_function_from_bytes(raw):
    header, data = _unpack(raw, GRID_MAGIC)
    try:
        g = Grid(int(header["n"]), int(header["N"]), float(header["T"]))
        E = ValueSpace(int(header["d"]), float(header.get("r", 2.0)))
    except KeyError as exc:
        raise InvalidArgument(f"grid-function header lacks {exc}") from None
    shape = g.shape + (E.dim,)
    if data.size != 2 * int(np.prod(shape)):
        raise InvalidArgument("grid-function body does not match its header")
    return GridFunction(g, _from_pairs(data, shape), E)


def save_grid_function(f, path):
    """Write ``path`` and the JSON sidecar ``path + '.json'``."""
    path = Path(path)
    path.write_bytes(grid_function_bytes(f))
    Path(str(path) + ".json").write_text(json.dumps(_grid_header(f), indent=2, sort_keys=True))
    return path


def load_grid_function(path):
    return grid_function_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# representations
#
# coefficient records: part, nu, m_1..m_n, gamma_1..gamma_n, re, im, then the
# unit direction as (re, im) pairs; part 0 = lambda terms, 1 = rho terms,
# 2 = atomic coefficients (gamma and direction are zero).  Atomic files carry
# the level envelopes after the records.

def _prm_from_dict(d):
    num = lambda x: float("inf") if x == "inf" else float(x)  # noqa: E731
    return SpaceParams(float(d["s"]), num(d["p"]), num(d["q"]), d["family"], int(d["n"]),
                       K=d.get("K"), L=d.get("L"), a=d.get("a"), mu=int(d.get("mu", 3)),
                       k_poisson=d.get("k_poisson"), N_mom=d.get("N_mom"))


def _records_quark(vectors, part, space, n):
    rows = []
    for (gamma, nu), V in sorted(vectors.items()):
        mag = space.norms(V)
        M = V.shape[0]
        for idx in zip(*np.nonzero(mag)):
            m = [i - M // 2 for i in idx]
            e = V[idx] / mag[idx]
            rows.append([part, nu, *m, *gamma, mag[idx], 0.0, *_complex_pairs(e).ravel()])
    return rows


def representation_bytes(rep):
    if not isinstance(rep, (QuarkRepresentation, AtomicRepresentation)):
        raise InvalidArgument(f"cannot serialise {type(rep).__name__}")
    g = rep.grid
    n = g.n
    if isinstance(rep, QuarkRepresentation):
        d = rep.space.dim
        header = {"kind": "quark", "prm": rep.prm.to_dict(), "mu": rep.mu, "Gamma": rep.gamma_max,
                  "L": rep.L, "nu_max": rep.nu_max, "s_rho": rep.s_rho, "space": rep.space.to_dict(),
                  "window": rep.window.metadata(), "grid": g.to_dict()}
        rows = (_records_quark(rep.lam_vectors, 0, rep.space, n)
                + _records_quark(rep.rho_vectors, 1, rep.space, n))
        extra = np.zeros(0)
    elif isinstance(rep, AtomicRepresentation):
        space = next(iter(rep.envelopes.values())).space
        d = space.dim
        header = {"kind": "atomic", "prm": rep.prm.to_dict(), "mu": rep.mu, "Gamma": None,
                  "nu_max": rep.nu_max, "k": rep.k, "space": space.to_dict(),
                  "window": rep.window.metadata(), "grid": g.to_dict(),
                  "envelope_levels": sorted(rep.envelopes)}
        rows = []
        for (nu, m), lam in rep.coefficients.items():
            rows.append([2, nu, *np.atleast_1d(m), *([0] * n), lam.real, lam.imag, *([0.0] * 2 * d)])
        extra = np.concatenate([_complex_pairs(rep.envelopes[nu].values).ravel()
                                for nu in sorted(rep.envelopes)]) if rep.envelopes else np.zeros(0)
    width = 2 + 2 * n + 2 + 2 * d
    header["record_width"] = width
    header["records"] = len(rows)
    block = np.asarray(rows, dtype=float).reshape(-1, width)
    return _pack(REP_MAGIC, header, np.concatenate([block.ravel(), extra]))


def representation_from_bytes(raw):
    header, data = _unpack(raw, REP_MAGIC)
    try:
        gd, sd = header["grid"], header["space"]
        g = Grid(int(gd["n"]), int(gd["N"]), float(gd["T"]))
        E = ValueSpace(int(sd["dim"]), float(sd["r"]))
        prm = _prm_from_dict(header["prm"])
        window = build_partition_window(g, float(header["window"]["d"]))
        width, count = int(header["record_width"]), int(header["records"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"corrupt representation header: {exc}") from None
    n, d = g.n, E.dim
    if width != 2 + 2 * n + 2 + 2 * d or data.size < width * count:
        raise InvalidArgument("representation body does not match its header")
    rec = data[:width * count].reshape(count, width)
    rest = data[width * count:]
    if header["kind"] == "quark":
        rep = QuarkRepresentation(prm, g, window, int(header["L"]), int(header["Gamma"]),
                                  int(header["mu"]), int(header["nu_max"]),
                                  s_rho=header.get("s_rho"), space=E)
        for row in rec:
            part, nu = int(row[0]), int(row[1])
            m = [int(v) for v in row[2:2 + n]]
            gamma = tuple(int(v) for v in row[2 + n:2 + 2 * n])
            lam = row[2 + 2 * n] + 1j * row[3 + 2 * n]
            e = _from_pairs(row[4 + 2 * n:], (d,))
            store = rep.lam_vectors if part == 0 else rep.rho_vectors
            M = int(round(g.T * 2 ** nu))
            V = store.setdefault((gamma, nu), np.zeros((M,) * n + (d,), dtype=complex))
            V[tuple((mi + M // 2) % M for mi in m)] = lam * e
        return rep
    if header["kind"] == "atomic":
        levels = [int(v) for v in header["envelope_levels"]]
        size = int(np.prod(g.shape)) * d * 2
        if rest.size != size * len(levels):
            raise InvalidArgument("envelope block does not match its header")
        env = {nu: GridFunction(g, _from_pairs(rest[i * size:(i + 1) * size], g.shape + (d,)), E)
               for i, nu in enumerate(levels)}
        lam = CoefficientField.for_grid(g)
        for nu in levels:
            lam.level(nu)
        for row in rec:
            nu = int(row[1])
            lam[nu, [int(v) for v in row[2:2 + n]]] = row[2 + 2 * n] + 1j * row[3 + 2 * n]
        return AtomicRepresentation(prm, g, window, int(header["mu"]), int(header["nu_max"]),
                                    int(header["k"]), lam, env)
    raise InvalidArgument(f"unknown representation kind {header['kind']!r}")


def save_representation(rep, path):
    path = Path(path)
    path.write_bytes(representation_bytes(rep))
    return path


def load_representation(path):
    return representation_from_bytes(Path(path).read_bytes())
