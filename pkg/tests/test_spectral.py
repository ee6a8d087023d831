import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from qsep import spectral as S
from qsep.rng import make_rng
from qsep.testfns import TestFn1D, TestFunctionError, cos_mode, sin_mode, suite_1d

COS = cos_mode(1)
SUITE = suite_1d()


# -- mollifier ---------------------------------------------------------------------------


def test_mollifier_examples():
    for eps in (0.01, 0.1, 0.4):
        assert S.mollifier_hat(eps, 0, 0) == 1.0
    assert S.mollifier_hat(0.25, 1, 1) == pytest.approx(4 / np.pi**2, abs=1e-15)


def test_mollifier_matches_box_integral():
    eps, k = 0.15, 3
    val, _ = integrate.quad(lambda x: np.cos(2 * np.pi * k * x) / (2 * eps), -eps, eps)
    assert S.mollifier_hat(eps, k, 0) == pytest.approx(val, abs=1e-13)


def test_mollifier_lipschitz_in_eps():
    k, m = np.meshgrid(np.arange(-30, 31), np.arange(-30, 31), indexing="ij")
    r = np.sqrt(k**2 + m**2)
    ratios = []
    for eps, delta in ((0.2, 0.1), (0.1, 0.05), (0.05, 0.01), (0.3, 0.29)):
        d = np.abs(S.mollifier_hat(eps, k, m) - S.mollifier_hat(delta, k, m))
        ratios.append(np.max(d[r > 0] / ((eps - delta) * r[r > 0])))
    assert max(ratios) < 2 * np.pi  # a single universal constant covers the grid


def test_mollifier_width_validated():
    with pytest.raises(ValueError):
        S.mollifier_hat(0.0, 1, 1)


# -- Poisson solves ----------------------------------------------------------------------


def test_sin_example():
    eps, K = 0.1, 8
    psi = S.poisson_solve_mollified(sin_mode(1), eps, K).to_dense()
    assert psi[K + 1, K] == pytest.approx(-S.mollifier_hat(eps, 1, 0) / (4 * np.pi), abs=1e-15)


def test_poisson_round_trip():
    K = 32
    for f in SUITE.values():
        for eps in (None, 0.1):
            psi = S.poisson_solve_mollified(f, eps, K)
            src = S.diagonal_source(f, K, eps)
            lap = psi.laplacian()
            keep = psi.radius2 > 0
            np.testing.assert_allclose(lap.coeffs[keep], src.coeffs[keep], atol=1e-12)


def test_band_support():
    K = 16
    psi = S.poisson_solve_diagonal(SUITE["mixed"], K).to_dense()
    k, m = np.meshgrid(np.arange(-K, K + 1), np.arange(-K, K + 1), indexing="ij")
    assert np.all(psi[np.abs(k + m) > 2] == 0)
    assert np.all(psi[(k + m) == 0] == 0)


def test_eps_to_zero_matches_diagonal():
    K = 16
    a = S.poisson_solve_mollified(COS, 1e-9, K).coeffs
    b = S.poisson_solve_diagonal(COS, K).coeffs
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_poisson_needs_mean_zero():
    with pytest.raises(TestFunctionError):
        S.poisson_solve_diagonal(TestFn1D.from_modes({0: 1.0, 1: 0.5, -1: 0.5}), 8)


def test_fields_are_real():
    for f in SUITE.values():
        assert S.poisson_solve_mollified(f, 0.1, 20).is_hermitian()


def test_mollifier_gap_slope_and_bound():
    for f in SUITE.values():
        fit = S.lemma41_fit(f, K=1024)
        assert abs(fit["slope"] - 1) <= 0.2
        eps = np.array(fit["eps"])
        assert np.all(np.array(fit["gaps"]) <= fit["C"] * eps * f.dirichlet() * (1 + 1e-12))


def test_mollified_energy_converges_to_diagonal():
    K = 1024
    exact = S.poisson_solve_diagonal(COS, K)
    gaps = [S.h1_seminorm(S.poisson_solve_mollified(COS, e, K) - exact) for e in (0.2, 0.1, 0.05)]
    assert gaps[0] > gaps[1] > gaps[2]


# -- heat semigroup and norms ------------------------------------------------------------


def unit_mode_field(K, k, m):
    d = np.zeros((2 * K + 1, 2 * K + 1), complex)
    d[K + k, K + m] = 1.0
    d[K - k, K - m] = 1.0
    return S.SpectralField2D.from_dense(d)


def test_heat_examples():
    g = S.random_field(make_rng(1), 6)
    np.testing.assert_array_equal(S.heat_semigroup(g, 0.0).coeffs, g.coeffs)
    u = unit_mode_field(4, 1, 1)
    t = 0.013
    assert S.heat_semigroup(u, t).to_dense()[5, 5] == pytest.approx(np.exp(-8 * np.pi**2 * t), rel=1e-14)
    with pytest.raises(ValueError):
        S.heat_semigroup(g, -1.0)


def test_heat_contracts():
    rng = make_rng(2)
    for _ in range(10):
        g = S.random_field(rng, 6)
        norms = [S.l2_norm(S.heat_semigroup(g, t)) for t in (0, 1e-3, 1e-2, 1e-1, 1)]
        assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_heat_semigroup_property():
    g = S.random_field(make_rng(3), 5)
    a = S.heat_semigroup(S.heat_semigroup(g, 0.01), 0.02).coeffs
    np.testing.assert_allclose(a, S.heat_semigroup(g, 0.03).coeffs, atol=1e-15)


def test_norm_examples():
    u = unit_mode_field(3, 1, 0)
    assert S.l2_norm(u) == 2.0
    assert S.h1_seminorm(u) / S.l2_norm(u) == pytest.approx(4 * np.pi**2)


def test_parseval_on_grid():
    g = S.random_field(make_rng(4), 5)
    x = np.arange(256) / 256
    vals = g.evaluate(x, x)
    assert np.mean(vals**2) == pytest.approx(S.l2_norm(g), abs=1e-8)


def test_dense_round_trip():
    g = S.random_field(make_rng(5), 4)
    np.testing.assert_array_equal(S.SpectralField2D.from_dense(g.to_dense()).coeffs, g.coeffs)


def test_heat_gap_bounded_by_energy():
    rng = make_rng(6)
    for _ in range(10):
        g = S.random_field(rng, 6)
        for t in (0.01, 0.1):
            val = S.heat_gap_functional(g, t)
            assert 0 <= val <= 0.5 * t * S.h1_seminorm(g)


# -- small-time constant -----------------------------------------------------------------


def test_kappa_integrand():
    assert S.kappa_integrand(0.0) == pytest.approx(np.pi**4)
    x = np.linspace(0.01, 5, 40)
    np.testing.assert_array_equal(S.kappa_integrand(x), S.kappa_integrand(-x))
    assert S.kappa_integrand(1e-6) == pytest.approx(np.pi**4, rel=1e-9)


def test_kappa_two_ways():
    assert S.kappa() == pytest.approx(S.kappa_closed_form(), abs=1e-8)
    assert S.kappa_closed_form() == pytest.approx(0.07790, abs=5e-6)


def test_kappa_tolerance_stable():
    assert abs(S.kappa(epsabs=1e-10) - S.kappa(epsabs=5e-11)) < 1e-9


def test_smalltime_ratio_scaling():
    a = S.smalltime_ratio(COS, 1e-3, K=512, check=False)
    b = S.smalltime_ratio(COS.scaled(2.0), 1e-3, K=512, check=False)
    assert b == pytest.approx(4 * a, rel=1e-13)


def test_smalltime_ratio_stable_and_limit():
    r4 = S.smalltime_ratio(COS, 1e-4, K=4096)
    r5 = S.smalltime_ratio(COS, 1e-5, K=4096)
    assert abs(r4 / r5 - 1) < 0.03
    # the computed limit of the ratio
    assert r5 == pytest.approx(S.smalltime_limit(COS), rel=0.01)


def test_smalltime_cutoff_warning():
    with pytest.warns(S.CutoffWarning):
        S.smalltime_ratio(COS, 1e-5, K=64)


# -- long-time energy --------------------------------------------------------------------


def test_a_coefficient_examples():
    assert S.a_coefficient_closed(1) == pytest.approx(2.88132, abs=1e-5)
    assert S.a_coefficient(1) == pytest.approx(S.a_coefficient_closed(1), abs=1e-4)
    for u in (1, 2, 5):
        assert S.a_coefficient(u, V=2000) == S.a_coefficient(-u, V=2000)
    with pytest.raises(ValueError):
        S.a_coefficient(0)


def test_a_coefficient_direct_converges():
    # tail of the direct sum is about 2 u / V
    for u in (1, 2, 3):
        for V in (1000, 10000):
            assert abs(S.a_coefficient(u, V) - S.a_coefficient_closed(u)) < 3 * u / V


def test_a_plateau_is_pi():
    assert S.a_plateau() == pytest.approx(np.pi, rel=1e-10)
    assert abs(S.a_plateau() - np.pi / 2) > 1.0


def test_longtime_energy_two_ways():
    for f in SUITE.values():
        direct = S.longtime_energy(f, K=512)
        via_a = S.longtime_energy_from_a(f)
        assert direct == pytest.approx(via_a, rel=1e-3)
    cos_val = S.longtime_energy(COS, K=512)
    assert S.longtime_energy_from_a(COS) == pytest.approx(2 * S.a_coefficient_closed(1) * 0.25)
    assert cos_val < S.longtime_energy_from_a(COS)  # truncation only drops positive terms


def test_longtime_energy_scaling_and_translation():
    f = SUITE["mixed"]
    s = S.longtime_energy(f, K=128)
    assert S.longtime_energy(f.scaled(3.0), K=128) == pytest.approx(9 * s, rel=1e-13)
    assert S.longtime_energy(f.shifted(0.37), K=128) == pytest.approx(s, rel=1e-13)


def test_longtime_energy_equals_h1_not_l2():
    psi = S.poisson_solve_diagonal(COS, 64)
    assert S.longtime_energy(COS, K=64) == pytest.approx(S.h1_seminorm(psi), rel=1e-14)
    assert not math.isclose(S.l2_norm(psi), S.h1_seminorm(psi), rel_tol=0.1)


def test_cutoff_doubling_for_reported_constants():
    with warnings.catch_warnings():
        warnings.simplefilter("error", S.CutoffWarning)
        S.longtime_energy(COS, K=1024, check=True)
