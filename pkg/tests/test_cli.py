import json

import numpy as np
import pytest

from ode_discovery.cli import main
from ode_discovery.series_io import read_series

SMALL = ["--candidate_order=2", "--population_size=40", "--max_generations=15"]


@pytest.fixture
def critical_csv(tmp_path):
    path = tmp_path / "critical.csv"
    assert main(["simulate", "spring", "--regime", "critical", "-o", str(path)]) == 0
    return path


def test_simulate_variants(tmp_path):
    noisy = tmp_path / "n.csv"
    assert main(["simulate", "spring", "--regime", "overdamped", "--noise", "-o", str(noisy)]) == 0
    assert len(read_series(noisy)) == 1000
    decay = tmp_path / "d.csv"
    assert main(["simulate", "decay", "--rate", "1.3", "--duration", "2", "--n-points", "3", "-o", str(decay)]) == 0
    assert read_series(decay).ys[1] == pytest.approx(np.exp(-1.3))
    edc = tmp_path / "e.csv"
    assert main(["simulate", "edc", "--component", "UVC-E1", "--augment", "300", "--noise", "-o", str(edc)]) == 0
    assert len(read_series(edc)) == 300


def test_discover_writes_report_and_sidecars(tmp_path, critical_csv, capsys):
    out = tmp_path / "run" / "report.json"
    assert main(["discover", str(critical_csv), "-o", str(out), "--seed", "2", "--figures", *SMALL]) == 0
    doc = json.loads(out.read_text())
    assert doc["provenance"]["seed"] == 2
    assert doc["provenance"]["config"]["candidate_order"] == 2
    np.testing.assert_allclose(doc["ode"]["coefficients"], [1, 2, 1], rtol=0.05)
    for suffix in ("fit", "ga_history", "refinement", "coefficients"):
        assert (out.parent / f"report_{suffix}.csv").exists()
    assert (out.parent / "report_fit.png").stat().st_size > 0
    assert "coefficients" in capsys.readouterr().out

    sp = tmp_path / "map.csv"
    assert main(["sparsity", str(out), "-o", str(sp)]) == 0
    lines = sp.read_text().splitlines()
    assert lines[0] == "label,order0,order1,order2" and lines[1].startswith("report,")


def test_config_file_supplies_seed(tmp_path, critical_csv):
    cfg = tmp_path / "c.toml"
    cfg.write_text("seed = 5\ncandidate_order = 2\npopulation_size = 30\nmax_generations = 5\n")
    out = tmp_path / "r.json"
    assert main(["discover", str(critical_csv), "-o", str(out), "--config", str(cfg)]) == 0
    assert json.loads(out.read_text())["provenance"]["seed"] == 5


@pytest.mark.parametrize(
    "extra",
    [
        [],  # no seed
        ["--seed", "1", "--bogus=3"],
        ["--seed", "1", "--candidate_order=0"],
        ["--seed", "1", "stray"],
    ],
)
def test_input_errors_exit_2(tmp_path, critical_csv, extra, capsys):
    assert main(["discover", str(critical_csv), "-o", str(tmp_path / "r.json"), *extra]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,1\n1,oops\n")
    assert main(["discover", str(bad), "-o", str(tmp_path / "r.json"), "--seed", "0"]) == 2
    assert "bad.csv:3" in capsys.readouterr().err


def test_numerical_failure_exit_3_names_stage(tmp_path, capsys):
    zero = tmp_path / "zero.csv"
    zero.write_text("x,y\n" + "".join(f"{i * 0.1},0\n" for i in range(100)))
    assert main(["discover", str(zero), "-o", str(tmp_path / "r.json"), "--seed", "0", *SMALL]) == 3
    assert "stage 'nullspace'" in capsys.readouterr().err
