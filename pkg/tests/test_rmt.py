import math

import numpy as np
import pytest

from brownmap import NumericalError, compare, density_grid, make_example
from brownmap.model import ModelError
from brownmap.rmt import (SpectrumSample, apportion, eigenvalues,
                          sample_matrix, sample_spectrum)


def test_apportion_equal_weights():
    _, spec = make_example("x2_plus_y2")
    assert apportion(spec.nu.masses, 1000).tolist() == [250] * 4


def test_apportion_largest_remainder():
    rows = apportion([0.5, 0.3, 0.2], 7)
    # quotas 3.5, 2.1, 1.4: the largest remainders go first
    assert rows.tolist() == [4, 2, 1]
    assert apportion([1 / 3] * 3, 10).sum() == 10


def test_apportion_too_few_rows():
    with pytest.raises(ModelError):
        apportion([0.5, 0.25, 0.25], 2)


def test_ex31_diagonal_small_n():
    profile, _ = make_example("x2_minus_y2")
    M = sample_matrix(profile, 4, seed=0)
    assert M.dtype == float
    X = np.random.default_rng(0).standard_normal((4, 4)) / 2
    np.testing.assert_allclose(np.diag(M - X), [1, 1, -1, -1], atol=1e-15)


def test_circular_matrix_is_scaled_gaussian():
    profile, _ = make_example("circular")
    M = sample_matrix(profile, 50, seed=3)
    X = np.random.default_rng(3).standard_normal((50, 50))
    np.testing.assert_allclose(M, X / math.sqrt(50), atol=1e-15)


def test_complex_entries_have_unit_variance():
    profile, _ = make_example("circular")
    M = sample_matrix(profile, 400, seed=1, complex_entries=True)
    assert np.iscomplexobj(M)
    assert np.mean(np.abs(M) ** 2) * 400 == pytest.approx(1.0, abs=0.02)


def test_variance_profile_scales_blocks():
    profile, _ = make_example("x2_y3")
    M = sample_matrix(profile, 600, seed=2)
    off = M - np.diag(np.diag(M))
    var = np.sum(off ** 2) / (600 * 599) * 600
    assert var == pytest.approx(profile.scalar_variance, rel=0.02)


def test_sample_matrix_needs_two_rows():
    profile, _ = make_example("circular")
    with pytest.raises(ValueError):
        sample_matrix(profile, 1, 0)


def test_eigenvalues_of_diagonal_matrix():
    lam = eigenvalues(np.diag([3.0, -1.0, 2.5]))
    assert sorted(lam.real) == [-1.0, 2.5, 3.0]
    assert np.all(lam.imag == 0)


def test_eigenvalues_of_rotation():
    lam = eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(sorted(lam.imag), [-1, 1], atol=1e-15)
    np.testing.assert_allclose(lam.real, 0, atol=1e-15)


def test_eigenvalues_of_companion_matrix():
    # companion matrix of z^3 - 1
    C = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], float)
    lam = eigenvalues(C)
    roots = np.exp(2j * np.pi * np.arange(3) / 3)
    for r in roots:
        assert np.min(np.abs(lam - r)) < 1e-12


def test_eigenvalues_errors():
    with pytest.raises(NumericalError):
        eigenvalues(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    assert eigenvalues(np.zeros((0, 0))).size == 0


def test_sample_is_reproducible_and_conjugate_paired():
    profile, _ = make_example("x2_minus_y2")
    a = sample_spectrum(profile, 200, seed=7)
    b = sample_spectrum(profile, 200, seed=7)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    lam = a.eigenvalues
    conj = np.conj(lam)
    dist = np.min(np.abs(lam[:, None] - conj[None, :]), axis=1)
    assert np.max(dist) < 1e-9
    assert np.sum(lam).real == pytest.approx(a.trace.real, abs=1e-9)
    assert abs(np.sum(lam).imag) < 1e-9


def test_different_seeds_differ():
    profile, _ = make_example("circular")
    a = sample_spectrum(profile, 50, seed=0).eigenvalues
    b = sample_spectrum(profile, 50, seed=1).eigenvalues
    assert not np.allclose(np.sort_complex(a), np.sort_complex(b))


def test_compare_empty_sample():
    profile, _ = make_example("circular")
    grid = density_grid(profile, (-1, 1, -1, 1), 20, 20)
    rep = compare(SpectrumSample(0, 0, np.zeros(0, complex)), grid, profile)
    assert rep.inside_fraction == 1.0 and rep.cells_tested == 0
    assert rep.band_fraction == 1.0


def test_compare_circular_counts():
    profile, _ = make_example("circular")
    grid = density_grid(profile, (-1, 1, -1, 1), 60, 60)
    sample = sample_spectrum(profile, 1000, seed=0)
    rep = compare(sample, grid, profile)
    assert rep.inside_fraction >= 0.97
    assert rep.cells_tested >= 40
    assert rep.band_fraction >= 0.9
