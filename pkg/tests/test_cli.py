import json

import numpy as np
import pytest

from besovkit import cli
from besovkit.config import RunConfig
from besovkit.errors import InvalidArgument, QuadratureFailure
from besovkit.grid import Grid, GridFunction
from besovkit.io import load_grid_function, save_grid_function

SMALL = {"grid": {"n": 1, "N": 1024, "T": 40.0}}


def _config(tmp_path, **sections):
    cfg = json.loads(json.dumps(SMALL))
    cfg.update(sections)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def _rows(path):
    return path.read_text().strip().splitlines()[1:]


# -- configuration ---------------------------------------------------------------

def test_default_config_is_valid():
    assert RunConfig().validate().make_grid() == Grid(1, 4096, 16.0)


@pytest.mark.parametrize("section,patch,needle", [
    ("grid", {"N": 3}, "N"),
    ("kernels", {"J_max": 20}, "J_max"),
    ("kernels", {"d_support": 2.5}, "d_support"),
    ("decomposition", {"mu": 1}, "mu"),
    ("decomposition", {"nu_max": 1}, "nu_max"),
    ("decomposition", {"gamma_max": -1}, "gamma_max"),
    ("params", {"p": 0.4}, "p = 0.4"),
    ("params", {"s": -1.0}, "sigma"),
    ("corpus", {"seed": -3}, "seed"),
    ("corpus", {"kind": "nope"}, "corpus"),
    ("sweep", {"band": 0.5}, "band"),
])
def test_config_names_the_violation(section, patch, needle):
    with pytest.raises(InvalidArgument, match=needle):
        RunConfig.from_dict({section: patch})


def test_config_rejects_unknown_and_malformed(tmp_path):
    with pytest.raises(InvalidArgument, match="unknown"):
        RunConfig.from_dict({"colour": {}})
    with pytest.raises(InvalidArgument, match="unknown norm"):
        RunConfig.from_dict({"norms": ["fourier", "wavelet"]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidArgument, match="JSON"):
        RunConfig.load(bad)


def test_general_kind_needs_large_M():
    RunConfig.from_dict({"params": {"s": -0.5}, "decomposition": {"kind": "general", "M": 2}})
    with pytest.raises(InvalidArgument, match="M ="):
        RunConfig.from_dict({"params": {"s": 2.5}, "decomposition": {"kind": "general", "M": 2}})


def test_sweep_points_cardinality():
    assert len(RunConfig().sweep_points()) == 18


# -- exit codes ------------------------------------------------------------------

def test_bad_arguments_exit_2(tmp_path):
    assert cli.main(["nope"]) == 2
    assert cli.main(["norm", "--jobs", "0", "--out", str(tmp_path)]) == 2
    assert cli.main(["norm", "--config", str(tmp_path / "missing.json")]) == 2
    bad = _config(tmp_path, decomposition={"mu": 1})
    assert cli.main(["norm", "--config", bad, "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise QuadratureFailure("panel did not converge")
    monkeypatch.setattr(cli, "compute_norm", boom)
    cfg = _config(tmp_path, norms=["harmonic"], corpus={"kind": "bumps", "count": 1})
    assert cli.main(["norm", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_truncation_failure_exit_4(tmp_path):
    g = Grid(1, 2048, 16.0)
    x = g.points[..., 0]
    save_grid_function(GridFunction(g, np.exp(-x ** 2 / 2) * np.cos(20 * x)), tmp_path / "hf.bkgf")
    cfg = _config(tmp_path, grid={"n": 1, "N": 2048, "T": 16.0},
                  decomposition={"mu": 2, "nu_max": 5, "gamma_max": 3, "tolerance": 1e-2})
    args = ["decompose", "--config", cfg, "--input", str(tmp_path / "hf.bkgf"), "--out", str(tmp_path / "o")]
    assert cli.main(args) == 4


# -- norm ------------------------------------------------------------------------

def test_norm_zero_and_constant(tmp_path):
    g = Grid(1, 64, 2 * np.pi)
    save_grid_function(GridFunction.zeros(g), tmp_path / "zero.bkgf")
    save_grid_function(GridFunction(g, np.full(g.shape, -3.0)), tmp_path / "const.bkgf")
    cfg = _config(tmp_path, grid={"n": 1, "N": 64, "T": 2 * np.pi}, params={"s": 1.0, "p": 2.0, "q": 2.0},
                  norms=["fourier"])
    out = tmp_path / "o"
    assert cli.main(["norm", "--config", cfg, "--input", str(tmp_path), "--out", str(out)]) == 0
    rows = dict((r.split(",")[0], float(r.split(",")[2])) for r in _rows(out / "norms.csv"))
    assert rows["zero"] == 0.0
    assert rows["const"] == pytest.approx(3 * np.sqrt(2 * np.pi), rel=1e-12)


def test_norm_row_count_and_json(tmp_path):
    cfg = _config(tmp_path, norms=["fourier", "local_means"])
    out = tmp_path / "o"
    assert cli.main(["norm", "--config", cfg, "--out", str(out), "--format", "json", "--jobs", "3"]) == 0
    data = json.loads((out / "norms.json").read_text())
    assert len(data) == 20 * 2
    assert {d["norm_tag"] for d in data} == {"fourier", "local_means"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "norm" and manifest["config"]["corpus"]["seed"] == 0
    assert "engines" in manifest


def test_csv_output_is_deterministic(tmp_path):
    cfg = _config(tmp_path, norms=["fourier", "peetre"])
    runs = []
    for i, jobs in enumerate(("1", "4")):
        out = tmp_path / f"o{i}"
        assert cli.main(["norm", "--config", cfg, "--out", str(out), "--seed", "7", "--jobs", jobs]) == 0
        runs.append(((out / "norms.csv").read_bytes(), (out / "ratios.csv").read_bytes()))
    assert runs[0] == runs[1]


# -- decompose / reconstruct -----------------------------------------------------

def test_decompose_reconstruct_bumps(tmp_path):
    # default grid and decomposition settings
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"corpus": {"kind": "bumps", "count": 2}}))
    cfg = str(path)
    out = tmp_path / "d"
    assert cli.main(["decompose", "--config", cfg, "--out", str(out)]) == 0
    errs = [float(r.split(",")[2]) for r in _rows(out / "decompose.csv")]
    assert len(errs) == 2 and max(errs) < 1e-2
    reps = sorted(out.glob("*.bkrp"))
    args = ["reconstruct", "--config", cfg, "--out", str(tmp_path / "r")]
    for r in reps:
        args += ["--rep", str(r)]
    assert cli.main(args) == 0
    rec = [float(r.split(",")[1]) for r in _rows(tmp_path / "r" / "reconstruct.csv")]
    np.testing.assert_allclose(rec, errs, rtol=1e-9)
    back = load_grid_function(tmp_path / "r" / f"{reps[0].stem}.reconstructed.bkgf")
    assert back.grid == Grid(1, 4096, 16.0)


def test_decompose_reconstruct_zero(tmp_path):
    g = Grid(1, 1024, 4.0)
    save_grid_function(GridFunction.zeros(g), tmp_path / "zero.bkgf")
    cfg = _config(tmp_path, grid={"n": 1, "N": 1024, "T": 4.0})
    out = tmp_path / "d"
    assert cli.main(["decompose", "--config", cfg, "--input", str(tmp_path / "zero.bkgf"), "--out", str(out)]) == 0
    assert cli.main(["reconstruct", "--config", cfg, "--rep", str(out / "zero.bkrp"),
                     "--out", str(tmp_path / "r")]) == 0
    assert float(_rows(tmp_path / "r" / "reconstruct.csv")[0].split(",")[1]) == 0.0


def test_reconstruct_bad_magic_and_missing(tmp_path):
    bad = tmp_path / "bad.bkrp"
    bad.write_bytes(b"JUNK" + bytes(20))
    assert cli.main(["reconstruct", "--rep", str(bad), "--out", str(tmp_path / "r")]) == 2
    assert cli.main(["reconstruct", "--out", str(tmp_path / "r")]) == 2
    assert cli.main(["reconstruct", "--rep", str(tmp_path / "none.bkrp"), "--out", str(tmp_path / "r")]) == 2


# -- sweep and the rest ------------------------------------------------------------

def test_sweep_single_point_single_norm(tmp_path):
    cfg = _config(tmp_path, norms=["fourier"], sweep={"s": [1.0], "p": [2.0], "q": [2.0]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    bands = _rows(out / "sweep_bands.csv")
    assert len(bands) == 2
    for row in bands:
        assert float(row.split(",")[8]) == 1.0 and row.endswith("false")


def test_sweep_tables_per_point(tmp_path):
    cfg = _config(tmp_path, norms=["fourier", "local_means"], corpus={"kind": "bumps", "count": 3},
                  sweep={"s": [0.5, 1.0], "p": [1.0, 2.0], "q": [2.0, "inf"]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert len(_rows(out / "sweep_bands.csv")) == 8 + 1
    assert len(_rows(out / "sweep_values.csv")) == 8 * 3 * 2


def test_sweep_empty_grid(tmp_path):
    cfg = _config(tmp_path, sweep={"s": []})
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_gen_corpus_and_reuse(tmp_path):
    out = tmp_path / "c"
    cfg = _config(tmp_path, norms=["fourier"])
    assert cli.main(["gen-corpus", "--config", cfg, "--out", str(out)]) == 0
    assert len(list(out.glob("*.bkgf"))) == 20
    assert cli.main(["norm", "--config", cfg, "--input", str(out), "--out", str(tmp_path / "n")]) == 0
    assert len(_rows(tmp_path / "n" / "norms.csv")) == 20


def test_validate_atoms(tmp_path):
    cfg = _config(tmp_path, grid={"n": 1, "N": 2048, "T": 16.0}, corpus={"kind": "bumps", "count": 1},
                  decomposition={"nu_max": 5, "gamma_max": 2})
    out = tmp_path / "v"
    assert cli.main(["validate-atoms", "--config", cfg, "--out", str(out)]) == 0
    rows = _rows(out / "atoms.csv")
    assert sum(r.split(",")[1] == "quark" for r in rows) == 3
    assert all(r.endswith("true") for r in rows)
