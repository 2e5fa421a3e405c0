import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brownmap import (CATALOG, AtomMeasure, NumericalError, construct_even,
                      construct_odd, f_axis_derivatives, f_eval, make_example,
                      symmetric_classify)
from brownmap.constructions import (Y3_DELTA, Y3_T, even_base, f_a_atoms,
                                    g_a_atoms,
                                    inverse_square_axis_derivative,
                                    merge_atoms, odd_base)


def partial_fraction_derivative(a, k, y=0.0):
    """d^k/dy^k of 1/|iy - a|^2 from 1/((p - a)(-p - conj a)), p = iy.

    The partial fraction split needs Re a != 0, which makes it an independent
    route from the Leibniz form used by the library.
    """
    p = 1j * y
    ab = np.conj(a)
    coef = -1 / (a + ab)
    term = (1j ** k * (-1) ** k * math.factorial(k)
            * ((p - a) ** (-k - 1) - (p + ab) ** (-k - 1)))
    return float((coef * term).real)


def test_f_eval_ex31_is_one():
    _, spec = make_example("x2_minus_y2")
    assert f_eval(spec.nu, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_f_eval_ex33_unnormalized_sum():
    d = Y3_DELTA
    raw = (np.array([1, -1, 1j]), np.array([1.0, 1.0, d]))
    y0 = (math.sqrt(7) - 2) / 3
    # (2 + delta) / t is the unnormalized threshold at the singular point
    assert f_eval(raw, 1j * y0) == pytest.approx((2 + d) / Y3_T, abs=1e-10)


def test_f_eval_at_atom_is_infinite():
    assert f_eval(([1.0], [1.0]), 1.0) == math.inf


def test_f_a_second_derivative_real_atom():
    atoms, weights = f_a_atoms(1.0)
    d = f_axis_derivatives((atoms, weights), 2)
    assert d[1] == pytest.approx(-2.0, abs=1e-12)
    lap = 4 * np.sum(weights / np.abs(atoms) ** 4)
    assert lap == pytest.approx(4.0, abs=1e-12)


def test_f_a_second_derivative_diagonal_atom():
    atoms, weights = f_a_atoms((1 + 1j) / math.sqrt(2))
    assert f_axis_derivatives((atoms, weights), 2)[1] == pytest.approx(
        2.0, abs=1e-12)


def test_f_a_and_g_a_value_at_origin():
    for a in (1.0, 0.3 + 0.8j, 2 * np.exp(0.4j)):
        fa, fw = f_a_atoms(a)
        ga, gw = g_a_atoms(a)
        assert f_eval((fa, fw), 0.0) == pytest.approx(abs(a) ** 2)
        assert f_eval((ga, gw), 0.0) == pytest.approx(abs(a) ** 2)


def test_merge_atoms_adds_weights():
    atoms, weights = merge_atoms([1, 1, 2j], [0.25, 0.25, 0.5])
    assert atoms.tolist() == [1, 2j]
    assert weights.tolist() == [0.5, 0.5]


@given(st.floats(0.05, 3.0), st.floats(-1.5, 1.5), st.integers(1, 7),
       st.floats(-0.3, 0.3))
def test_axis_derivative_matches_partial_fractions(re, im, k, y):
    a = complex(re, im)
    got = inverse_square_axis_derivative(1j * y - a, k)
    want = partial_fraction_derivative(a, k, y)
    scale = math.factorial(k + 1) / abs(1j * y - a) ** (k + 2)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-12 * scale)


def test_axis_derivative_on_imaginary_atom():
    # 1/(1 - y)^2 for an atom at i: k-th derivative (k+1)! at 0
    for k in range(1, 6):
        assert inverse_square_axis_derivative(-1j, k) == pytest.approx(
            math.factorial(k + 1))


def test_axis_derivatives_match_finite_differences():
    nu = (np.array([1 + 0.5j, -0.7 + 1j, 0.2 - 1.3j]),
          np.array([0.3, 0.5, 0.2]))
    d = f_axis_derivatives(nu, 5)
    # derivatives of a Chebyshev interpolant on 60 nodes in [-h, h]
    h, nodes = 0.1, 60
    u = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
    vals = f_eval(nu, 1j * h * u)
    cheb = np.polynomial.chebyshev.Chebyshev.fit(u, vals, 24, domain=[-1, 1])
    coef = cheb.convert(kind=np.polynomial.Polynomial).coef
    fd = [math.factorial(k) * coef[k] / h ** k for k in range(1, 6)]
    np.testing.assert_allclose(d, fd, rtol=1e-6)


def test_g_a_first_derivative():
    atoms, weights = g_a_atoms(np.exp(1j * math.pi / 4))
    assert f_axis_derivatives((atoms, weights), 1)[0] == pytest.approx(
        math.sqrt(2), rel=1e-14)


def test_even_base_step():
    for sign in (1, -1):
        c, z = even_base(sign)
        assert abs(c[0] * (z[0] ** 3).real - sign) <= 1e-12
        assert z[0].real > 0 and z[0].imag > 0
    with pytest.raises(ValueError):
        even_base(0)


def test_odd_base_pair():
    (c,), (z,) = odd_base()
    assert abs(z) == pytest.approx(0.75 * math.sqrt(2))
    assert np.angle(z) == pytest.approx(math.pi / 12)
    assert c * (z ** 2).imag == pytest.approx(2, abs=1e-12)
    assert c * (z ** 3).real == pytest.approx(3, abs=1e-12)


def test_axis_derivatives_reject_atom():
    with pytest.raises(ValueError):
        f_axis_derivatives(([0j], [1.0]), 3)


@pytest.mark.parametrize("n,tau", [(2, 1), (2, -1), (3, 1), (3, -1)])
def test_even_construction(n, tau):
    sol = construct_even(n, tau)
    assert sol.kind == "even" and sol.expected() == (2 * n, tau)
    assert np.all(sol.c > 0)
    assert np.all(sol.z.real > 0) and np.all(sol.z.imag > 0)
    assert len(set(np.round(sol.z, 10))) == sol.z.size
    for k in range(1, n):
        assert abs(sol.moments(2 * k + 1).real) <= 1e-9
    top = sol.moments(2 * n + 1).real
    assert np.sign(top) == (-1) ** n * tau
    nu = sol.measure()
    assert f_eval(nu, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert nu.masses.sum() == pytest.approx(1.0, abs=1e-14)
    d = f_axis_derivatives(nu, 2 * n)
    scale = [math.factorial(k) * np.sum(nu.masses / np.abs(nu.atoms) ** (k + 2))
             for k in range(1, 2 * n + 1)]
    assert np.all(np.abs(d[:-1]) <= 1e-8 * np.array(scale[:-1]))
    assert np.sign(d[-1]) == tau
    assert symmetric_classify(nu, 1.0) == (2 * n, tau)


def test_even_construction_argument_checks():
    with pytest.raises(ValueError):
        construct_even(1, 1)
    with pytest.raises(ValueError):
        construct_even(2, 0)


@pytest.mark.parametrize("n", [1, 2])
def test_odd_construction(n):
    sol = construct_odd(n)
    assert sol.expected() == (2 * n + 1, -1)
    assert np.all(sol.c > 0)
    assert np.all(sol.z.real > 0) and np.all(sol.z.imag > 0)
    for k in range(1, n + 1):
        s = (-1) ** (k + 1)
        assert s * sol.moments(2 * k).imag == pytest.approx(2 * k, abs=1e-8)
        assert s * sol.moments(2 * k + 1).real == pytest.approx(
            2 * k + 1, abs=1e-8)
    assert (-1) ** n * sol.moments(2 * n + 2).imag < 2 * n + 2
    assert sol.residuals["slack"] > 0
    assert symmetric_classify(sol.measure(), 1.0) == (2 * n + 1, -1)


def test_odd_n1_axis_derivatives():
    nu = construct_odd(1).measure()
    d = f_axis_derivatives(nu, 3)
    assert abs(d[0]) < 1e-9 and abs(d[1]) < 1e-8
    assert d[2] < 0


def test_odd_n3_is_reported_as_numerical_failure():
    with pytest.raises(NumericalError):
        construct_odd(3)


def test_mirror_symmetry_of_constructed_measures():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, 50) + 1j * rng.uniform(-1, 1, 50)
    for sol in (construct_even(2, -1), construct_odd(1)):
        nu = sol.measure()
        np.testing.assert_allclose(f_eval(nu, pts),
                                   f_eval(nu, -np.conj(pts)), rtol=1e-12)


def test_catalog_entries():
    assert set(CATALOG) >= {"circular", "x2", "x2_minus_y2", "x2_plus_y2",
                            "x2_y3", "x2_y4", "x2_infinity"}
    for name in CATALOG:
        profile, spec = make_example(name)
        assert isinstance(spec.nu, AtomMeasure)
        assert spec.nu.masses.sum() == pytest.approx(1.0)
        assert profile.scalar_variance == pytest.approx(spec.t)


def test_catalog_thresholds_at_expected_points():
    for name in ("x2_minus_y2", "x2_plus_y2", "x2_y3", "x2_y4"):
        _, spec = make_example(name)
        point = spec.expected[0].location
        assert f_eval(spec.nu, point) == pytest.approx(1 / spec.t, rel=1e-12)
        d1 = f_axis_derivatives(spec.nu, 1, point)[0]
        assert abs(d1) < 1e-12


def test_x2_infinity_options():
    _, spec = make_example("x2_infinity", circle_atoms=16)
    assert spec.nu.atoms.size == 17
    with pytest.raises(ValueError):
        make_example("x2_infinity", circle_atoms=4)


def test_unknown_example():
    with pytest.raises(KeyError, match="unknown example"):
        make_example("nope")
