"""
Tests de mallas esféricas y geometría convexa por función soporte.
"""

import math

import numpy as np
import pytest

from geometry.convexgeom import (
    GraphPatch, SupportSurfaceSnapshot, dilate, distance_to_boundary, ellipsoid,
    enclosed_volume, enclosure_report, encloses, from_snapshot, graph_curvatures,
    graph_second_fundamental_form, hausdorff_distance, lens, mean_curvature,
    principal_radii, radii_matrix, rebase, recenter, sphere, steiner_point, support_curvatures,
    to_snapshot, translate,
)
from geometry.errors import (
    ConvexityLossError, DomainError, GridMismatchError, OriginNotInteriorError
)
from geometry.spheregrid import AxisymmetricGrid, LatLongGrid, grid_from_description, sphere_area


# ========================================
# TESTS MALLAS
# ========================================

def test_area_de_esferas():
    """|S²| = 4π y |S³| = 2π²"""
    assert sphere_area(2) == pytest.approx(4.0 * math.pi)
    assert sphere_area(3) == pytest.approx(2.0 * math.pi ** 2)


@pytest.mark.parametrize("grid", [AxisymmetricGrid(2, 24), AxisymmetricGrid(4, 24), LatLongGrid(12, 24)])
def test_pesos_normalizados(grid):
    """Los pesos de cuadratura suman |S^n|"""
    assert grid.weights().sum() == pytest.approx(sphere_area(grid.n), rel=1e-13)


def test_nodos_centrados_en_celda(axis_grid):
    """Ningún nodo cae sobre un polo"""
    assert axis_grid.theta.min() > 0.0
    assert axis_grid.theta.max() < math.pi


def test_antipodas(latlong_grid):
    """El antípoda de ν es −ν"""
    nu = latlong_grid.normals()
    np.testing.assert_allclose(nu[latlong_grid.antipodes()], -nu, atol=1e-14)


def test_mallas_invalidas():
    """Dimensiones o resoluciones fuera de rango"""
    with pytest.raises(DomainError):
        AxisymmetricGrid(1, 16)
    with pytest.raises(DomainError):
        AxisymmetricGrid(2, 3)
    with pytest.raises(DomainError):
        LatLongGrid(8, 15)


def test_descripcion_reconstruye_malla(latlong_grid):
    """grid_from_description(describe()) da la misma malla"""
    assert grid_from_description(latlong_grid.describe()).same_as(latlong_grid)
    with pytest.raises(DomainError):
        grid_from_description({"kind": "icosahedral"})


# ========================================
# TESTS CURVATURAS
# ========================================

def test_esfera_curvaturas_exactas(axis_grid3):
    """Radios de la esfera de radio 2: exactamente (2, 2, 2) en todos los nodos"""
    radii = principal_radii(sphere(axis_grid3, 2.0))
    np.testing.assert_allclose(radii, 2.0, rtol=1e-13)


def test_esfera_latlong(latlong_grid):
    """λ = 1/R también en la malla latitud-longitud"""
    lam = support_curvatures(sphere(latlong_grid, 0.5), 37)
    np.testing.assert_allclose(lam.values, 2.0, rtol=1e-12)


def test_elipsoide_radios_analiticos(axis_grid):
    """Elipsoide (1, 1, 1.5): r_meridiano = a²c²/h³, r_tangencial = a²/h"""
    a, c = 1.0, 1.5
    surface = ellipsoid(axis_grid, [a, a, c])
    h = surface.h
    w = np.diagonal(radii_matrix(surface), axis1=1, axis2=2)
    np.testing.assert_allclose(w[:, 0], a ** 2 * c ** 2 / h ** 3, rtol=2e-2)
    np.testing.assert_allclose(w[:, 1], a ** 2 / h, rtol=2e-2)


def test_elipsoide_no_axisimetrico_rechazado(axis_grid):
    """Semiejes distintos en el plano ecuatorial no caben en la malla axisimétrica"""
    with pytest.raises(DomainError):
        ellipsoid(axis_grid, [1.0, 1.2, 1.5])


def test_curvatura_media_esfera(unit_sphere):
    """H = n/R"""
    np.testing.assert_allclose(mean_curvature(unit_sphere), 2.0, rtol=1e-13)


def test_nodo_fuera_de_malla(unit_sphere):
    with pytest.raises(DomainError):
        support_curvatures(unit_sphere, unit_sphere.grid.size)


def test_perdida_de_convexidad(axis_grid):
    """Un pico aislado en h da h'' muy negativo"""
    h = np.ones(axis_grid.size)
    h[10] = 1.5
    with pytest.raises(ConvexityLossError) as info:
        support_curvatures(sphere(axis_grid, 1.0).with_h(h), 10)
    assert info.value.node == 10


# ========================================
# TESTS VOLUMEN, TRASLACIÓN Y STEINER
# ========================================

def test_volumen_esfera(unit_sphere, axis_grid3):
    """V(B²) = 4π/3, V(B³) = π²/2"""
    assert enclosed_volume(unit_sphere) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    assert enclosed_volume(sphere(axis_grid3, 1.0)) == pytest.approx(math.pi ** 2 / 2.0, rel=1e-12)


def test_volumen_elipsoide(prolate, latlong_grid):
    """V = 4π/3·a·b·c en ambas mallas"""
    expected = 4.0 * math.pi / 3.0 * 1.5
    assert enclosed_volume(prolate) == pytest.approx(expected, rel=1e-2)
    assert enclosed_volume(ellipsoid(latlong_grid, [1.0, 1.0, 1.5])) == pytest.approx(expected, rel=3e-2)


def test_steiner_recupera_traslacion(axis_grid, latlong_grid):
    """El punto de Steiner de una esfera trasladada es su centro"""
    moved = translate(sphere(axis_grid, 1.0), [0.0, 0.0, 0.3])
    np.testing.assert_allclose(steiner_point(moved), [0.0, 0.0, 0.3], atol=1e-12)

    moved = translate(sphere(latlong_grid, 1.0), [0.1, -0.2, 0.3])
    np.testing.assert_allclose(steiner_point(moved), [0.1, -0.2, 0.3], atol=1e-12)


def test_traslacion_lateral_en_malla_axisimetrica(unit_sphere):
    with pytest.raises(DomainError):
        translate(unit_sphere, [0.1, 0.0, 0.0])


def test_recentrar_no_cambia_el_cuerpo(axis_grid):
    """Tras recentrar, el soporte respecto al centro es el de la esfera"""
    centered = recenter(translate(sphere(axis_grid, 1.0), [0.0, 0.0, -0.4]))
    np.testing.assert_allclose(centered.origin, [0.0, 0.0, -0.4], atol=1e-12)
    np.testing.assert_allclose(centered.h, 1.0, atol=1e-12)


def test_rebase_inverso(prolate):
    back = rebase(rebase(prolate, [0.0, 0.0, 0.2]), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(back.h, prolate.h, atol=1e-14)


# ========================================
# TESTS INCLUSIÓN Y DISTANCIAS
# ========================================

def test_inclusion_de_esferas(axis_grid):
    big, small = sphere(axis_grid, 2.0), sphere(axis_grid, 1.0)
    assert encloses(big, small)
    assert not encloses(small, big)
    assert hausdorff_distance(big, small) == pytest.approx(1.0)


def test_inclusion_mallas_distintas(unit_sphere, axis_grid3):
    with pytest.raises(GridMismatchError):
        encloses(unit_sphere, sphere(axis_grid3, 1.0))


def test_dilatacion(prolate):
    """h ↦ 2h duplica radios y conserva la inclusión"""
    big = dilate(prolate, 2.0)
    np.testing.assert_allclose(principal_radii(big), 2.0 * principal_radii(prolate), rtol=1e-12)
    assert encloses(big, prolate)
    with pytest.raises(DomainError):
        dilate(prolate, 0.0)


def test_reporte_de_inclusion(unit_sphere):
    """ρ = 1 y diámetro 2 para la esfera unidad"""
    report = enclosure_report(unit_sphere)
    assert report.inner_ball_radius == pytest.approx(1.0)
    assert report.diameter == pytest.approx(2.0)


def test_origen_exterior(axis_grid):
    outside = translate(sphere(axis_grid, 1.0), [0.0, 0.0, 2.0])
    with pytest.raises(OriginNotInteriorError):
        enclosure_report(outside)


def test_distancia_al_borde(unit_sphere):
    """Centro a distancia 1; punto a media altura a 0.5"""
    d = distance_to_boundary(unit_sphere, np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.5]]))
    assert d[0] == pytest.approx(1.0, rel=1e-12)
    assert d[1] == pytest.approx(0.5, abs=1e-2)


def test_lente_tiene_lados_planos(axis_grid):
    """El radio tangencial de la lente crece como R + ρ₀/senθ hacia el polo"""
    surface = lens(axis_grid, 1.0, 0.5)
    radii = principal_radii(surface)
    assert radii.max() > 3.0
    assert np.all(radii > 0.0)


# ========================================
# TESTS SNAPSHOTS
# ========================================

def test_snapshot_json(prolate):
    """El snapshot JSON reconstruye la misma superficie"""
    raw = to_snapshot(prolate).model_dump_json()
    back = from_snapshot(SupportSurfaceSnapshot.model_validate_json(raw))
    assert back.grid.same_as(prolate.grid)
    np.testing.assert_array_equal(back.h, prolate.h)


# ========================================
# TESTS PARCHES DE GRAFO
# ========================================

def test_casquete_esferico():
    """u = R − √(R² − |x|²) tiene curvaturas 1/R en todo el parche"""
    R = 2.0

    def s(p):
        return math.sqrt(R ** 2 - float(np.dot(p, p)))

    patch = GraphPatch.from_functions(
        np.array([[0.0, 0.0], [0.3, -0.2], [0.8, 0.5]]),
        u=lambda p: R - s(p),
        grad=lambda p: p / s(p),
        hess=lambda p: np.eye(2) / s(p) + np.outer(p, p) / s(p) ** 3,
    )
    np.testing.assert_allclose(graph_curvatures(patch), 1.0 / R, rtol=1e-12)


def test_segunda_forma_en_el_minimo():
    """Con Du = 0 la segunda forma es D²u"""
    d2u = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(graph_second_fundamental_form([0.0, 0.0], d2u), d2u)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_segunda_forma_invariante_por_rotaciones(rng, n):
    """Rotar las coordenadas horizontales conjuga a_ij y deja sus autovalores fijos"""
    for _ in range(20):
        du = rng.normal(scale=0.8, size=n)
        m = rng.normal(size=(n, n))
        d2u = 0.5 * (m + m.T)
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        a = graph_second_fundamental_form(du, d2u)
        rotated = graph_second_fundamental_form(q @ du, q @ d2u @ q.T)
        np.testing.assert_allclose(np.linalg.eigvalsh(rotated), np.linalg.eigvalsh(a), atol=1e-9)
        np.testing.assert_allclose(rotated, q @ a @ q.T, atol=1e-9)


def test_parche_muestreado():
    """Paraboloide |x|²/2 muestreado: curvaturas (1, 1) en el origen"""
    axis = np.linspace(-1.0, 1.0, 21)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    patch = GraphPatch.from_samples([axis, axis], 0.5 * (xx ** 2 + yy ** 2))
    center = int(np.argmin(np.sum(patch.domain ** 2, axis=1)))
    np.testing.assert_allclose(graph_curvatures(patch)[center], [1.0, 1.0], atol=1e-12)


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
