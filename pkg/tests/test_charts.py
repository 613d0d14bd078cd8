"""
Tests de la carta x₁ = f(z, x̄), la condición (★★) y la matriz b.
"""

from dataclasses import replace

import numpy as np
import pytest

from flatside.charts import (
    assemble_b_matrix, check_starstar, eigen_asymptotics_check, f_grid_values,
    f_jet_from_u, geometric_z_grid, graph_to_f, model_jet, starstar_matrix, u_jet_from_f,
)
from flatside.pressure import lens_profile
from geometry.errors import DegenerateChartError, DomainError, InversionError


@pytest.fixture
def lens_2d():
    return lens_profile(2, 2, 1.0, 1.0, nodes=200)


# ========================================
# TESTS MALLA Y JET MODELO
# ========================================

def test_malla_geometrica():
    z = geometric_z_grid(1e-2, 0.5, 1e-4)
    assert z[0] == 1e-2
    assert z.size == 8
    assert z[-1] <= 1e-4 < z[-2]
    with pytest.raises(DomainError):
        geometric_z_grid(1e-2, 1.5, 1e-4)
    with pytest.raises(DomainError):
        geometric_z_grid(1e-4, 0.5, 1e-2)


def test_jet_modelo():
    """f_z = a/(2√z) y −z^{3/2} f_zz = a/4"""
    jet = model_jet(1e-4, [0.0, 0.0], 0.3, 2.0, [1.0, 1.5])
    assert jet.n == 3
    assert jet.f == pytest.approx(0.3 + 2.0 * 1e-2)
    assert jet.f_z == pytest.approx(100.0)
    assert -jet.z ** 1.5 * jet.f_zz == pytest.approx(0.5)
    np.testing.assert_allclose(-np.diag(jet.f_xx), [1.0, 1.5])


def test_jet_modelo_dominio():
    with pytest.raises(DomainError):
        model_jet(0.0, [0.0], 0.0, 1.0, [1.0])
    with pytest.raises(DomainError):
        model_jet(1e-3, [0.0, 0.0], 0.0, 1.0, [1.0])


# ========================================
# TESTS CAMBIO DE CARTA
# ========================================

def test_identidades_del_cambio_de_carta():
    """u_1·f_z = 1 y u_i = −f_i/f_z"""
    jet = model_jet(1e-3, [0.1, -0.2], 0.0, 2.0, [1.0, 1.5], e=[0.3, 0.1])
    u = u_jet_from_f(jet)
    assert u.du[0] * jet.f_z == pytest.approx(1.0)
    np.testing.assert_allclose(u.du[1:], -jet.f_x / jet.f_z)
    assert u.u == jet.z


def test_cambio_de_carta_inverso():
    jet = model_jet(1e-3, [0.1, -0.2], 0.0, 2.0, [1.0, 1.5], e=[0.3, 0.1])
    back = f_jet_from_u(u_jet_from_f(jet))
    assert back.f_z == pytest.approx(jet.f_z, rel=1e-12)
    assert back.f_zz == pytest.approx(jet.f_zz, rel=1e-12)
    np.testing.assert_allclose(back.f_zx, jet.f_zx, rtol=1e-10)
    np.testing.assert_allclose(back.f_xx, jet.f_xx, rtol=1e-10, atol=1e-12)


def test_identidad_temporal():
    """u_t = −f_t/f_z y vuelta"""
    jet = replace(model_jet(1e-3, [0.1], 0.0, 2.0, [1.0]), f_t=0.3)
    u = u_jet_from_f(jet)
    assert u.u_t == pytest.approx(-0.3 / jet.f_z)
    assert f_jet_from_u(u).f_t == pytest.approx(0.3)


def test_carta_degenerada():
    flat = model_jet(1e-3, [0.0], 0.0, 0.0, [1.0])
    with pytest.raises(DegenerateChartError):
        u_jet_from_f(flat)
    with pytest.raises(DegenerateChartError):
        assemble_b_matrix(flat)


# ========================================
# TESTS INVERSIÓN DEL PERFIL
# ========================================

def test_carta_de_la_lente(lens_2d):
    """Con x̄ = 0: f = ρ₀ + √(2Rz − z²)"""
    z = geometric_z_grid(1e-2, 0.7, 1e-5)
    chart = graph_to_f(lens_2d, z=z)
    np.testing.assert_allclose(chart.f, 1.0 + np.sqrt(2.0 * z - z ** 2), rtol=1e-4)
    np.testing.assert_allclose(chart.f_z, (1.0 - z) / np.sqrt(2.0 * z - z ** 2), rtol=1e-2)
    assert chart.identity_defect() < 1e-10
    assert chart.validate() < 5e-2


def test_carta_fuera_de_rango(lens_2d):
    with pytest.raises(InversionError):
        graph_to_f(lens_2d, z=np.array([10.0]))


def test_carta_dimension_de_xbar(lens_2d):
    with pytest.raises(DomainError):
        graph_to_f(lens_2d, xbar=[0.0, 0.0], z=np.array([1e-3]))


def test_valores_en_malla(lens_2d):
    """f(z, x₂) = √(R(z)² − x₂²)"""
    z = np.array([1e-2, 1e-3])
    values = f_grid_values(lens_2d, z, [0.0, 0.3])
    radius = 1.0 + np.sqrt(2.0 * z - z ** 2)
    np.testing.assert_allclose(values[:, 1], np.sqrt(radius ** 2 - 0.09), rtol=1e-4)


# ========================================
# TESTS (★★) Y MATRIZ b
# ========================================

def test_starstar_del_modelo():
    """La matriz (★★) del modelo es diag(a/4, c)"""
    jets = [model_jet(z, [0.0, 0.0], 0.0, 2.0, [1.0, 1.5]) for z in (1e-2, 1e-3, 1e-4)]
    np.testing.assert_allclose(starstar_matrix(jets[0]), np.diag([0.5, 1.0, 1.5]), atol=1e-12)
    report = check_starstar(jets, 0.4)
    assert report.holds
    assert report.min_eigenvalue == pytest.approx(0.5)
    assert not check_starstar(jets, 0.6).holds


def test_matriz_b_del_modelo():
    """b = diag(1/(a√z v²), c) con v² = 1 + 4z/a²"""
    z, a = 1e-4, 2.0
    bm = assemble_b_matrix(model_jet(z, [0.0, 0.0], 0.0, a, [1.0, 1.5]))
    v2 = 1.0 + 4.0 * z / a ** 2
    np.testing.assert_allclose(bm.eigenvalues(), [1.0 / (a * np.sqrt(z) * v2), 1.5, 1.0], rtol=1e-10)
    assert bm.v ** 2 == pytest.approx(v2)
    np.testing.assert_allclose(bm.b, bm.b.T)


def test_asintotica_de_autovalores():
    """√z·λ₁ → 1/a y λ_i → c_i"""
    jets = [model_jet(z, [0.0, 0.0], 0.0, 2.0, [1.0, 1.5]) for z in geometric_z_grid(1e-2, 0.5, 1e-6)]
    report = eigen_asymptotics_check(jets, interface_curvatures=[1.0, 1.5])
    assert report.mu == pytest.approx(0.5, rel=2e-2)
    assert report.flatness < 2e-2
    assert max(report.tangential_deviation) < 1e-10
    assert report.interface_error < 1e-10
    assert report.failures == []


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
