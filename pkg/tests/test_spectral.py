import math

import numpy as np
import pytest

from qcpml.spectral import (
    AdmissibilityError,
    SpectralData,
    admissibility,
    beta_max,
    default_mode_count,
    essential_curves,
    ray_distance,
    thresholds,
    transverse_mode,
)


def test_thresholds_values():
    assert thresholds(1) == pytest.approx([9.8696044], abs=1e-6)
    assert thresholds(3) == pytest.approx(
        [math.pi**2, 4 * math.pi**2, 9 * math.pi**2], rel=1e-12
    )
    t = thresholds(10)
    assert np.all(np.diff(t) > 0)


def test_mode_orthonormality():
    # composite Gauss quadrature, accurate far beyond the 1e-10 bound
    nodes, weights = np.polynomial.legendre.leggauss(96)
    y = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    for j in range(1, 6):
        for k in range(1, 6):
            val = float(np.sum(w * transverse_mode(j, y) * transverse_mode(k, y)))
            assert val == pytest.approx(1.0 if j == k else 0.0, abs=1e-10)


def test_default_mode_count():
    K = default_mode_count(20.0)
    t = thresholds(K)
    assert t[-1] > 120.0
    assert K == 1 or thresholds(K - 1)[-1] <= 120.0


def test_beta_max_default_config():
    data = SpectralData.for_mu0(20.0)
    b = beta_max(20.0, 0.5j, data)
    assert b == pytest.approx(1.5914, abs=1e-4)
    assert b == pytest.approx(0.5 * math.sqrt(20.0 - math.pi**2), rel=1e-12)


def test_beta_max_real_lambda_zero():
    data = SpectralData.for_mu0(20.0)
    assert beta_max(20.0, 0.0 + 0.0j, data) == pytest.approx(0.0, abs=1e-15)


def test_beta_max_generic_lambda():
    data = SpectralData.for_mu0(20.0)
    b = beta_max(20.0, 0.3 + 0.3j, data)
    assert b == pytest.approx(0.95485, abs=1e-4)
    assert b == pytest.approx(0.3 * math.sqrt(20.0 - math.pi**2), rel=1e-10)


def test_beta_max_branch_independence():
    # |Im{(1+lam) sqrt(mu0-nu)}| is the same on either square-root branch
    data = SpectralData.for_mu0(20.0)
    lam = 0.2 + 0.4j
    roots = np.sqrt((20.0 - data.thresholds).astype(complex))
    flipped = np.abs(np.imag((1.0 + lam) * (-roots))).min()
    assert beta_max(20.0, lam, data) == pytest.approx(flipped, rel=1e-14)


def test_beta_max_threshold_rejected():
    data = SpectralData(K=4)
    with pytest.raises(AdmissibilityError, match="threshold"):
        beta_max(math.pi**2, 0.5j, data)


def test_essential_curves_values():
    data = SpectralData(K=2)
    curves = essential_curves(0.5j, 0.0, data, xi_range=np.array([0.0, 1.0]))
    first = curves[0]
    assert first.nu == pytest.approx(math.pi**2)
    assert first.points[0] == pytest.approx(math.pi**2)
    w = (1.0 + 0.5j) ** (-2)
    assert w == pytest.approx(0.48 - 0.64j, abs=1e-12)
    assert first.points[1] == pytest.approx(math.pi**2 + 0.48 - 0.64j, abs=1e-10)


def test_essential_curves_ray_angle():
    data = SpectralData(K=3)
    lam = 0.5j
    xi = np.linspace(0.1, 5.0, 40)
    for curve in essential_curves(lam, 0.0, data, xi_range=xi):
        ang = np.angle(curve.points - curve.nu)
        assert np.allclose(ang, -2.0 * np.angle(1.0 + lam), atol=1e-12)


def test_essential_curves_vertex_with_beta():
    data = SpectralData(K=1)
    lam, beta = 0.4j, 0.7
    curve = essential_curves(lam, beta, data, xi_range=np.array([0.0]))[0]
    expect = math.pi**2 - (1.0 + lam) ** (-2) * beta**2
    assert curve.points[0] == pytest.approx(expect, rel=1e-14)


def test_essential_curves_conjugation_symmetry():
    data = SpectralData(K=3)
    xi = np.linspace(0.0, 4.0, 17)
    lam, beta = 0.3 + 0.45j, 0.8
    a = essential_curves(lam, beta, data, xi_range=xi)
    b = essential_curves(np.conj(lam), -beta, data, xi_range=xi)
    for ca, cb in zip(a, b):
        assert np.allclose(cb.points, np.conj(ca.points), rtol=1e-14, atol=1e-14)


def test_essential_curves_sign_pattern():
    # Im(lam) > 0 and beta = 0: every curve point off the vertex has
    # negative imaginary part exactly when arg(1 + lam) > 0
    data = SpectralData(K=3)
    xi = np.linspace(0.2, 6.0, 25)
    for lam in (0.5j, 0.3 + 0.2j):
        curves = essential_curves(lam, 0.0, data, xi_range=xi)
        assert np.angle(1.0 + lam) > 0
        for c in curves:
            assert np.all(c.points.imag < 0)


def test_admissibility_default():
    data = SpectralData.for_mu0(20.0)
    rep = admissibility(20.0, 0.5j, data)
    assert rep.admissible
    assert rep.threshold_distance == pytest.approx(20.0 - math.pi**2, rel=1e-12)
    assert rep.threshold_distance == pytest.approx(10.13, abs=0.01)
    assert abs(4 * math.pi**2 - 20.0) == pytest.approx(19.48, abs=0.01)


def test_admissibility_at_threshold():
    data = SpectralData(K=3)
    rep = admissibility(math.pi**2, 0.5j, data)
    assert not rep.admissible


def test_admissibility_real_lambda_on_spectrum():
    # lambda = 0 degenerates the curves to [nu, inf), which contains mu0 = 20
    data = SpectralData.for_mu0(20.0)
    rep = admissibility(20.0, 0.0 + 0.0j, data)
    assert not rep.admissible
    assert rep.curve_distance == pytest.approx(0.0, abs=1e-12)


def test_ray_distance_projection():
    data = SpectralData(K=1)
    lam = 0.5j
    w = (1.0 + lam) ** (-2)
    on_ray = math.pi**2 + 2.3 * w
    assert ray_distance(on_ray, lam, data) == pytest.approx(0.0, abs=1e-12)
    off = on_ray + 0.25j * w / abs(w)
    assert ray_distance(off, lam, data) == pytest.approx(0.25, abs=1e-10)
    behind = math.pi**2 - 0.4 * w
    assert ray_distance(behind, lam, data) == pytest.approx(0.4 * abs(w), abs=1e-10)
