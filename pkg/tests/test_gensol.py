import math

import numpy as np
import pytest

from ode_discovery.characteristic import EigenMode, EigenSpectrum, eigen_spectrum
from ode_discovery.datagen import SPRING_CASES, NoiseSpec, add_noise, spring_mass_series
from ode_discovery.errors import InputError
from ode_discovery.gensol import (
    PENALTY,
    BasisLayout,
    GeneralSolutionModel,
    TimeSeries,
    basis_matrix,
    fit_amplitudes,
    fit_model,
    fitness,
    mse,
    n_basis_rows,
    predict,
)

CONST = EigenSpectrum((EigenMode(0, 0.0, 0.0),), 0)


def test_constant_basis_row():
    np.testing.assert_array_equal(basis_matrix(CONST, [0, 1, 2]), [[1, 1, 1]])


def test_double_root_row_at_zero():
    s = EigenSpectrum((EigenMode(2, -1.0, 0.0),), 2)
    np.testing.assert_array_equal(basis_matrix(s, [0.0]), [[1.0]])


def test_underdamped_paper_row():
    s = eigen_spectrum([1, 2, 4])
    g = math.sqrt(12) / 8
    # power sum runs to alpha inclusive, so alpha = 1 carries a (1 + x) factor
    want = [1.0, 2.0 * math.exp(-0.25) * (math.cos(g) + math.sin(g))]
    np.testing.assert_allclose(basis_matrix(s, [0.0, 1.0])[0], want, rtol=1e-12)


def test_layout_row_counts():
    s = EigenSpectrum((EigenMode(2, -1.0, 0.0), EigenMode(1, -0.5, 2.0)), 4)
    assert n_basis_rows(s, BasisLayout.PAPER_FAITHFUL) == 2
    assert n_basis_rows(s, BasisLayout.EXTENDED_PHASE) == 3 + 4
    assert n_basis_rows(s, BasisLayout.STANDARD) == 2 + 2
    for layout in BasisLayout:
        assert basis_matrix(s, np.linspace(0, 1, 5), layout).shape[0] == n_basis_rows(s, layout)


def test_fit_constant():
    np.testing.assert_allclose(fit_amplitudes(np.array([[1.0, 1, 1]]), [2, 2, 2]), [2.0])


def test_duplicate_rows_split_amplitude():
    x = np.linspace(0, 1, 7)
    e = np.vstack([np.exp(-x), np.exp(-x)])
    d = fit_amplitudes(e, 3.0 * np.exp(-x))
    np.testing.assert_allclose(d, [1.5, 1.5], rtol=1e-10)


def test_overdamped_exact_representation():
    ts = spring_mass_series(SPRING_CASES["overdamped"])
    s = eigen_spectrum([1, 4, 2])
    e = basis_matrix(s, ts.xs, BasisLayout.STANDARD)
    d = fit_amplitudes(e, ts.ys)
    assert mse(e.T @ d, ts.ys) <= 1e-12


def test_predict_zero_and_constant():
    s = eigen_spectrum([1, 2, 4])
    m = GeneralSolutionModel(s, (0.0,))
    np.testing.assert_array_equal(predict(m, np.linspace(0, 5, 4)), 0.0)
    np.testing.assert_array_equal(predict(GeneralSolutionModel(CONST, (5.0,)), [0, 7]), [5, 5])


def test_critical_fit_standard_layout():
    ts = spring_mass_series(SPRING_CASES["critical"])
    m = fit_model(ts, [1, 2, 1], BasisLayout.STANDARD)
    assert mse(predict(m, ts.xs), ts.ys) <= 1e-10


def test_amplitude_count_checked():
    with pytest.raises(InputError):
        GeneralSolutionModel(CONST, (1.0, 2.0))
    s = eigen_spectrum([1, 4, 2])
    with pytest.raises(InputError):
        GeneralSolutionModel(s, (1.0,), BasisLayout.STANDARD, (True,))


def test_active_mask_selects_rows():
    s = eigen_spectrum([1, 4, 2])
    x = np.linspace(0, 3, 9)
    m = GeneralSolutionModel(s, (2.0,), BasisLayout.STANDARD, (False, True))
    np.testing.assert_allclose(predict(m, x), 2.0 * basis_matrix(s, x, BasisLayout.STANDARD)[1])


def test_fitness_exact_and_penalty():
    ts = spring_mass_series(SPRING_CASES["critical"])
    assert fitness(ts, [1, 2, 1], BasisLayout.STANDARD) <= 1e-12
    assert fitness(ts, [1, 2, 0]) == PENALTY
    # e^{10 x} out to x = 50 exceeds the overflow limit
    long = TimeSeries(np.linspace(0, 50, 101), np.zeros(101))
    assert fitness(long, [-10, 1]) == PENALTY


def test_fitness_noisy_underdamped_true_coefficients():
    ts = add_noise(spring_mass_series(SPRING_CASES["underdamped"]), NoiseSpec())
    assert fitness(ts, [1, 2, 4], BasisLayout.STANDARD) <= 1e-6


def test_fitness_total_and_non_negative(rng):
    ts = add_noise(spring_mass_series(SPRING_CASES["critical"]), NoiseSpec())
    for layout in BasisLayout:
        for _ in range(100):
            loss = fitness(ts, rng.uniform(-10, 10, 4), layout)
            assert np.isfinite(loss) and loss >= 0


def test_least_squares_optimality(rng):
    x = np.linspace(0, 10, 200)
    for _ in range(100):
        c = rng.uniform(-1, 1, 4)
        c[-1] = 1.0
        try:
            e = basis_matrix(eigen_spectrum(c), x, BasisLayout.STANDARD)
        except Exception:
            continue
        if np.max(np.abs(e)) > 1e6:
            continue
        y = rng.normal(size=x.size)
        d = fit_amplitudes(e, y)
        base = np.linalg.norm(e.T @ d - y)
        delta = rng.normal(size=d.size)
        delta *= 1e-3 / np.linalg.norm(delta)
        assert np.linalg.norm(e.T @ (d + delta) - y) >= base * (1 - 1e-12)


def test_layout_consistency_simple_real_roots():
    # alpha = 0 and gamma = 0 for every mode: the layouts coincide
    s = EigenSpectrum((EigenMode(0, -0.3), EigenMode(0, -1.1)), 0)
    x = np.linspace(0, 5, 50)
    y = np.exp(-0.5 * x)
    preds = []
    for layout in (BasisLayout.PAPER_FAITHFUL, BasisLayout.EXTENDED_PHASE):
        e = basis_matrix(s, x, layout)
        preds.append(e.T @ fit_amplitudes(e, y))
    np.testing.assert_allclose(preds[0], preds[1], atol=1e-12)


def test_time_series_validation():
    with pytest.raises(InputError):
        TimeSeries([0, 1], [1])
    with pytest.raises(InputError):
        TimeSeries([1, 0], [1, 1])
    with pytest.raises(InputError):
        TimeSeries([0, 1], [1, np.inf])
