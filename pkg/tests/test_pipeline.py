import json

import numpy as np
import pytest

from ode_discovery import nullspace as ns
from ode_discovery.config import RunConfig
from ode_discovery.datagen import SPRING_CASES, first_order_series, spring_mass_series
from ode_discovery.errors import AllCoefficientsBelowTolerance, InputError, StageError
from ode_discovery.evolve import GAConfig
from ode_discovery.gensol import TimeSeries, fitness
from ode_discovery.pipeline import (
    SPRING_CELLS,
    discover,
    edc_training_series,
    sparsity_map,
    sparsity_rows,
    spring_truth,
)
from ode_discovery.reporting import dumps

SMALL = RunConfig(candidate_order=2, ga=GAConfig(population_size=60, max_generations=30, seed=3))


@pytest.fixture(scope="module")
def critical_report():
    return discover(spring_mass_series(SPRING_CASES["critical"]), SMALL)


def test_small_run_recovers_critical(critical_report):
    np.testing.assert_allclose(critical_report.coefficients, [1, 2, 1], rtol=0.05)
    assert critical_report.spline.max_phi <= 1e-6
    assert set(critical_report.timings) == {"ga", "surrogate", "spline", "nullspace"}


def test_stage_isolation(critical_report):
    r = critical_report
    data = spring_mass_series(SPRING_CASES["critical"])
    rescored = fitness(data, r.ga.best_coefficients, r.config.basis_layout, r.config.cluster_tol)
    assert abs(rescored - r.ga.best_loss) <= 1e-12
    spline = r.spline.model()
    g = ns.gradient_matrix(spline, r.config.candidate_order, r.config.n_gradient_samples, r.config.sample_trim)
    raw = ns.null_coefficients(g, r.config.rank_tol)
    again = ns.normalize_and_sparsify(raw, r.config.pivot, r.config.zero_tol, r.config.one_tol)
    assert again.coefficients == r.ode.coefficients


def test_report_is_finite_json_with_provenance(critical_report):
    doc = critical_report.to_dict()
    text = dumps(doc)
    assert json.loads(text)["provenance"]["seed"] == 3
    assert len(doc["provenance"]["input_sha256"]) == 64
    assert doc["provenance"]["config"]["population_size"] == 60
    assert "timings" in doc and "timings" not in critical_report.to_dict(include_timings=False)


def test_discover_is_deterministic(critical_report):
    again = discover(spring_mass_series(SPRING_CASES["critical"]), SMALL)
    assert dumps(again.to_dict(False)) == dumps(critical_report.to_dict(False))


def test_zero_series_fails_in_nullspace():
    ts = TimeSeries(np.linspace(0, 5, 200), np.zeros(200))
    with pytest.raises(StageError) as info:
        discover(ts, SMALL)
    assert info.value.stage == "nullspace"
    assert isinstance(info.value.error, AllCoefficientsBelowTolerance)
    assert "stage 'nullspace' failed" in str(info.value)


def test_discover_rejects_non_series():
    with pytest.raises(InputError):
        discover([1, 2, 3], SMALL)


def test_first_order_self_consistency():
    """Noise-free decay at rate k comes back within 1% of k."""
    k = 0.35
    sparse = first_order_series(k, 1.0, 10.0, 8)
    data = edc_training_series(sparse, 500)
    cfg = RunConfig.kinetics(candidate_order=3, ga=GAConfig(population_size=60, max_generations=30, seed=0))
    r = discover(data, cfg)
    assert r.ode.pivot_order == 1
    assert r.coefficients[1] == 1.0
    assert r.coefficients[0] == pytest.approx(k, rel=0.01)


def test_spring_truth_and_cells():
    np.testing.assert_allclose(spring_truth(SPRING_CASES["overdamped"], 5), [1, 4, 2, 0, 0, 0])
    assert SPRING_CELLS[0] == ("overdamped", True) and SPRING_CELLS[3] == ("overdamped", False)


def test_sparsity_rows_examples():
    v = np.array([1.0, 2.1, 4.5, 1e-6, 0.0, 0.0])
    np.testing.assert_array_equal(sparsity_rows([v / np.linalg.norm(v)], ["lowest"], 1e-4, 0.98), [[1, 1, 1, 0, 0, 0]])
    np.testing.assert_array_equal(sparsity_rows([[0, 0, 1.0]], ["lowest"], 1e-4, 0.98), [[0, 0, 1]])
    # kinetics: first-order pivot and one_tol = 0.1 put a 1 in column one
    rows = sparsity_rows([[0.2, 0.97, 0.01], [1.3, 1.0, 0.005]], [1, 1], 1e-4, 0.1)
    np.testing.assert_array_equal(rows[:, 1], [1, 1])


def test_sparsity_map_stacks_report_masks(critical_report):
    assert sparsity_map([]).shape == (0, 0)
    row = sparsity_map([critical_report])
    np.testing.assert_array_equal(row, [critical_report.ode.sparsity_mask])
