"""
Tests de familias ε, límite de la familia evolucionada, dilatación y sonda de velocidad.
"""

import numpy as np
import pytest

import config
from flows.flowcore import FlowConfig, run
from flows.viscosity import (
    approximate, dilation_sweep, dilation_uniqueness_check, family_flow_limit,
    heat_smooth, outer_sphere_extinction_time, speed_positivity_probe,
)
from geometry.convexgeom import encloses, lens, sphere
from geometry.errors import ApproximationError, DomainError
from geometry.spheregrid import AxisymmetricGrid


@pytest.fixture
def cfg():
    return FlowConfig(n=2, k=2, dt=1e-3, t_end=0.1, resolution=16)


@pytest.fixture
def small_sphere():
    return sphere(AxisymmetricGrid(2, 16), 1.0)


# ========================================
# TESTS FAMILIA ε
# ========================================

def test_calor_deja_fijas_las_constantes(small_sphere):
    np.testing.assert_allclose(heat_smooth(small_sphere, 0.01), 1.0, rtol=1e-12)


def test_calor_con_tau_nulo(axis_grid):
    surface = lens(axis_grid, 1.0, 0.5)
    np.testing.assert_array_equal(heat_smooth(surface, 0.0), surface.h)


def test_familia_sobre_la_lente(axis_grid):
    """Miembros dentro del padre, anidados y con radio mínimo >= ε/2"""
    parent = lens(axis_grid, 1.0, 0.5)
    fam = approximate(parent, [0.05, 0.2, 0.1])
    assert fam.epsilons == [0.2, 0.1, 0.05]
    for e, member, r_min in zip(fam.epsilons, fam.members, fam.min_radii()):
        assert encloses(parent, member)
        assert np.all(member.h <= parent.h - e + 1e-12)
        assert r_min >= e / 2.0 - 1e-12
    for coarse, fine in zip(fam.members[:-1], fam.members[1:]):
        assert encloses(fine, coarse)
    distances = fam.hausdorff()
    assert all(b <= a for a, b in zip(distances[:-1], distances[1:]))


def test_familia_sobre_la_esfera(small_sphere):
    """Para la esfera los miembros son esferas de radio 1 − ε"""
    fam = approximate(small_sphere, [0.2, 0.1])
    for e, member in zip(fam.epsilons, fam.members):
        np.testing.assert_allclose(member.h, 1.0 - e, rtol=1e-12)
    assert fam.shifts == pytest.approx([1.0, 1.0])
    assert fam.fallbacks == [False, False]


def test_familia_epsilon_invalido(small_sphere):
    with pytest.raises(DomainError):
        approximate(small_sphere, [0.1, 0.0])
    with pytest.raises(DomainError):
        approximate(small_sphere, [])


def test_familia_padre_no_convexo(axis_grid):
    h = np.ones(axis_grid.size)
    h[7] = 1.5
    with pytest.raises(ApproximationError):
        approximate(sphere(axis_grid, 1.0).with_h(h), [0.1])


# ========================================
# TESTS LÍMITE DE LA FAMILIA
# ========================================

def test_limite_de_la_familia(small_sphere, cfg):
    """Diferencias sucesivas con razón ≈ 1/2 <= 0.6 y sin violaciones de anidamiento"""
    fam = approximate(small_sphere, [0.2, 0.1, 0.05])
    report = family_flow_limit(fam, cfg, [0.05, 0.1])
    assert report.converged
    assert [p.t for p in report.probes] == [0.05, 0.1]
    for probe in report.probes:
        assert probe.nesting_violations == 0
        assert all(0.4 < r <= config.CAUCHY_RATIO for r in probe.ratios)
        assert probe.decay_slope == pytest.approx(1.0, abs=0.1)


def test_limite_con_extincion(small_sphere, cfg):
    """Tiempos de extinción crecientes cuando ε → 0 y acotados por la esfera exterior"""
    fam = approximate(small_sphere, [0.2, 0.1])
    report = family_flow_limit(fam, cfg, [0.05], with_extinction=True)
    assert report.outer_sphere_time == pytest.approx(1.0)
    assert report.extinction_monotone
    assert report.extinction_times[0] == pytest.approx(0.64, rel=2e-2)


def test_limite_en_paralelo_coincide(small_sphere, cfg, monkeypatch):
    fam = approximate(small_sphere, [0.2, 0.1, 0.05])
    serial = family_flow_limit(fam, cfg, [0.05])
    monkeypatch.setattr(config, "THREADS", 3)
    parallel = family_flow_limit(fam, cfg, [0.05])
    assert serial.probes[0].differences == parallel.probes[0].differences


def test_limite_sondas_invalidas(small_sphere, cfg):
    fam = approximate(small_sphere, [0.2, 0.1])
    with pytest.raises(DomainError):
        family_flow_limit(fam, cfg, [])
    with pytest.raises(DomainError):
        family_flow_limit(fam, cfg, [0.0, 0.05])


def test_esfera_exterior(axis_grid):
    """T_R usa el radio max h: para la lente R + ρ₀"""
    assert outer_sphere_extinction_time(lens(axis_grid, 1.0, 0.5), 1) == pytest.approx(1.5 ** 2 / 4.0, rel=1e-3)


# ========================================
# TESTS DILATACIÓN
# ========================================

def test_dilatacion_respeta_la_escala_parabolica(small_sphere, cfg):
    report = dilation_uniqueness_check(small_sphere, 0.1, cfg, [0.05, 0.1])
    assert report.times == [0.05, 0.1]
    assert max(report.scaling_deviation) < 1e-3
    assert 0.9 < report.constant < 1.5


def test_barrido_de_dilatacion(small_sphere, cfg):
    """max cercanía ∝ δ: pendiente log-log ≈ 1"""
    sweep = dilation_sweep(small_sphere, [0.1, 0.05, 0.025], cfg, [0.1])
    assert sweep["slope"] == pytest.approx(1.0, abs=0.1)
    assert sweep["constant_spread"] < 0.2


def test_dilatacion_delta_invalido(small_sphere, cfg):
    with pytest.raises(DomainError):
        dilation_uniqueness_check(small_sphere, 0.0, cfg, [0.05])


# ========================================
# TESTS SONDA DE VELOCIDAD
# ========================================

def test_sonda_de_velocidad(small_sphere, cfg):
    """Q_k >= dist/(4t₀) sobre los nodos que ya se movieron"""
    trace = run(small_sphere, cfg.model_copy(update={"snapshot_times": [0.05]}))
    report = speed_positivity_probe(trace, 0.05, 0.01)
    assert not report.empty
    assert report.nodes == small_sphere.grid.size
    assert report.satisfied
    assert report.min_speed == pytest.approx(0.5 / np.sqrt(0.95), rel=1e-3)


def test_sonda_usa_la_distancia_recorrida_por_nodo(small_sphere, cfg):
    """El margen es Q_k − d/(4t₀) con d la distancia de cada nodo a Σ₀, no el umbral"""
    trace = run(small_sphere, cfg.model_copy(update={"snapshot_times": [0.05]}))
    report = speed_positivity_probe(trace, 0.05, 0.01)
    radius = np.sqrt(0.95)
    expected = 0.5 / radius - (1.0 - radius) / (4.0 * 0.05)
    assert report.min_margin == pytest.approx(expected, rel=1e-3)
    assert report.min_margin < report.min_speed - 0.01 / (4.0 * 0.05)


def test_sonda_vacia(small_sphere, cfg):
    trace = run(small_sphere, cfg.model_copy(update={"snapshot_times": [0.05]}))
    report = speed_positivity_probe(trace, 0.05, 0.5)
    assert report.empty
    assert report.satisfied is None


def test_sonda_parametros_invalidos(small_sphere, cfg):
    trace = run(small_sphere, cfg.model_copy(update={"snapshot_times": [0.05]}))
    with pytest.raises(DomainError):
        speed_positivity_probe(trace, 0.0, 0.01)


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
