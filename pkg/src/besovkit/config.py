"""Run configuration for the command-line front end."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .decomposition import MU_MIN
from .errors import InvalidArgument
from .grid import Grid
from .kernels import max_levels
from .norms import NORM_TAGS, SpaceParams
from .value_space import ValueSpace

_KINDS = ("atomic", "quark", "general")
_CORPORA = ("standard", "bumps", "band_limited")


def _num(x):
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return float("inf")
    return float(x)


@dataclass
class RunConfig:
    grid: dict = field(default_factory=lambda: {"n": 1, "N": 4096, "T": 16.0})
    space: dict = field(default_factory=lambda: {"d": 1, "r": 2.0})
    params: dict = field(default_factory=lambda: {"s": 1.0, "p": 2.0, "q": 2.0, "family": "B"})
    kernels: dict = field(default_factory=lambda: {"J_max": None, "d_support": 1.3})
    decomposition: dict = field(default_factory=lambda: {
        "kind": "quark", "mu": 3, "gamma_max": 4, "nu_max": 6, "k_poisson": None, "M": 2, "L": None})
    corpus: dict = field(default_factory=lambda: {"kind": "standard", "seed": 0, "count": 5, "radius": None})
    norms: list = field(default_factory=lambda: list(NORM_TAGS))
    sweep: dict = field(default_factory=lambda: {
        "s": [0.5, 1.0, 2.0], "p": [1.0, 2.0], "q": [1.0, 2.0, "inf"], "families": ["B"], "band": 50.0})
    output: str = "besovkit_out"

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgument(f"unknown configuration sections: {sorted(unknown)}")
        cfg = cls()
        for key, value in d.items():
            default = getattr(cfg, key)
            if isinstance(default, dict):
                if not isinstance(value, dict):
                    raise InvalidArgument(f"section {key!r} must be a mapping")
                merged = dict(default)
                merged.update(value)
                setattr(cfg, key, merged)
            else:
                setattr(cfg, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise InvalidArgument(f"cannot read configuration: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"configuration is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise InvalidArgument("configuration must be a JSON object")
        return cls.from_dict(raw)

    # -- derived objects ---------------------------------------------------

    def make_grid(self):
        g = self.grid
        return Grid(int(g["n"]), int(g["N"]), float(g["T"]))

    def make_space(self):
        return ValueSpace(int(self.space["d"]), _num(self.space.get("r", 2.0)))

    def make_params(self, **override):
        d = dict(self.params)
        d.update(override)
        known = {k: d[k] for k in ("K", "L", "a", "mu", "k_poisson", "N_mom") if d.get(k) is not None}
        return SpaceParams(float(d["s"]), _num(d["p"]), _num(d["q"]), d.get("family", "B"),
                           int(self.grid["n"]), **known)

    def sweep_points(self):
        sw = self.sweep
        out = []
        for fam in sw.get("families", ["B"]):
            for s in sw.get("s", []):
                for p in sw.get("p", []):
                    for q in sw.get("q", []):
                        out.append(self.make_params(s=s, p=p, q=q, family=fam))
        return out

    # -- validation --------------------------------------------------------

    def validate(self):
        g = self.make_grid()
        self.make_space()
        prm = self.make_params()
        J = self.kernels.get("J_max")
        if J is not None and not (0 <= int(J) <= max_levels(g)):
            raise InvalidArgument(f"J_max = {J} violates 0 <= J_max <= {max_levels(g)} "
                                  "(2^(J+1) < pi N / T)")
        d = float(self.kernels.get("d_support", 1.3))
        if not (1.0 < d <= 2.0):
            raise InvalidArgument(f"d_support = {d} violates 1 < d <= 2")
        bad = [t for t in self.norms if t not in NORM_TAGS]
        if bad:
            raise InvalidArgument(f"unknown norm tags {bad}; choose from {list(NORM_TAGS)}")
        dec = self.decomposition
        if dec.get("kind") not in _KINDS:
            raise InvalidArgument(f"decomposition kind must be one of {_KINDS}")
        mu, nu_max, gam = int(dec["mu"]), int(dec["nu_max"]), int(dec["gamma_max"])
        if mu < MU_MIN:
            raise InvalidArgument(f"mu = {mu} violates mu >= {MU_MIN}")
        if nu_max < mu:
            raise InvalidArgument(f"nu_max = {nu_max} violates nu_max >= mu = {mu}")
        if gam < 0:
            raise InvalidArgument(f"gamma_max = {gam} violates gamma_max >= 0")
        if dec["kind"] != "general":
            n = g.n
            if not prm.p > n / (n + 1):
                raise InvalidArgument(f"p = {prm.p} violates p > n/(n+1) = {n / (n + 1):g}")
            if not prm.s > prm.sigma:
                raise InvalidArgument(f"s = {prm.s} violates s > sigma = {prm.sigma:g}")
        else:
            M = dec.get("M")
            if M is None or int(M) != M or not (M > prm.sigma and M > prm.s):
                raise InvalidArgument(f"M = {M} violates M > max(sigma, s) = {max(prm.sigma, prm.s):g}")
        if self.corpus.get("kind") not in _CORPORA:
            raise InvalidArgument(f"corpus kind must be one of {_CORPORA}")
        seed = self.corpus.get("seed", 0)
        if int(seed) != seed or seed < 0:
            raise InvalidArgument(f"seed = {seed} must be a nonnegative integer")
        band = float(self.sweep.get("band", 50.0))
        if not band >= 1:
            raise InvalidArgument(f"sweep band = {band} violates band >= 1")
        return self

    def to_dict(self):
        d = asdict(self)
        return json.loads(json.dumps(d, default=lambda x: "inf" if x == np.inf else str(x)))
