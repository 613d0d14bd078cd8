"""
Tests del álgebra simétrica: S_k, Q_k, gradiente y desigualdades.
"""

import numpy as np
import pytest

from conftest import fd_gradient, subset_qk, subset_symmetric, subset_symmetric_batch
from geometry.errors import DegenerateDenominatorError, DomainError
from geometry.symfun import (
    CurvatureVector, concavity_gap, dieter_lower_bound, elementary_symmetric,
    elementary_symmetric_minor, positivity_identity_check, qk_batch, qk_gradient,
    qk_gradient_batch, qk_quotient, speed_from_radii_batch,
)


# ========================================
# TESTS S_k
# ========================================

def test_elementary_symmetric_ejemplos():
    """S_2(1,2,3) = 11, S_0 = 1, S_2(1,1,1,1) = 6"""
    assert elementary_symmetric([1, 2, 3], 2) == pytest.approx(11.0, rel=1e-15)
    assert elementary_symmetric([5, 7, 9], 0) == 1.0
    assert elementary_symmetric([1, 1, 1, 1], 2) == pytest.approx(6.0, rel=1e-15)


def test_elementary_symmetric_k_fuera_de_rango():
    """k > n es un error de dominio"""
    with pytest.raises(DomainError):
        elementary_symmetric([1.0, 2.0], 3)
    with pytest.raises(DomainError):
        elementary_symmetric([1.0, 2.0], -1)


def test_elementary_symmetric_invariante_por_permutacion(rng):
    """Permutar λ deja S_k y Q_k idénticos bit a bit"""
    lam = rng.uniform(0.1, 5.0, size=7)
    perm = rng.permutation(lam)
    for k in range(1, 8):
        assert elementary_symmetric(lam, k) == elementary_symmetric(perm, k)
        assert qk_quotient(lam, k) == qk_quotient(perm, k)


def test_minor_omite_componente():
    """S_{1,p}(1,2,3) con p=0 es 5"""
    assert elementary_symmetric_minor([1, 2, 3], 1, 0) == pytest.approx(5.0)
    assert elementary_symmetric_minor([1, 2, 3], 3, 0) == 0.0


# ========================================
# TESTS Q_k
# ========================================

def test_qk_ejemplos():
    """Q_2(1,1,1) = 1 y Q_3(1,2,3) = 6/11"""
    assert qk_quotient([1, 1, 1], 2) == pytest.approx(1.0, rel=1e-15)
    assert qk_quotient([1, 2, 3], 3) == pytest.approx(6.0 / 11.0, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_qk_umbilico(n):
    """λ = (c, …, c) da Q_k = c(n−k+1)/k"""
    c = 2.5
    for k in range(1, n + 1):
        assert qk_quotient(CurvatureVector.umbilic(n, c), k) == pytest.approx(c * (n - k + 1) / k, rel=1e-13)


@pytest.mark.parametrize("n", range(1, 9))
def test_qk_contra_enumeracion(n, rng):
    """Q_k coincide con la enumeración de subconjuntos a 1e−12"""
    for lam in rng.uniform(0.05, 10.0, size=(200, n)):
        for k in range(1, n + 1):
            assert qk_quotient(lam, k) == pytest.approx(subset_qk(lam, k), rel=1e-12)


def test_qk_denominador_degenerado():
    """S_{k−1} = 0 lanza el error con λ adjunto"""
    with pytest.raises(DegenerateDenominatorError) as info:
        qk_quotient([0.0, 0.0, 1.0], 3)
    assert np.allclose(np.sort(info.value.lam), [0.0, 0.0, 1.0])


def test_qk_homogeneo_grado_uno(rng):
    """Q_k(sλ) = s·Q_k(λ)"""
    lam = rng.uniform(0.1, 3.0, size=4)
    assert qk_quotient(3.0 * lam, 2) == pytest.approx(3.0 * qk_quotient(lam, 2), rel=1e-13)


def test_qk_batch_coincide_con_escalar(rng):
    """qk_batch y qk_quotient dan el mismo valor por fila"""
    lams = rng.uniform(0.1, 3.0, size=(20, 4))
    batch = qk_batch(lams, 3)
    for row, value in zip(lams, batch):
        assert value == qk_quotient(row, 3)


# ========================================
# TESTS GRADIENTE
# ========================================

def test_gradiente_contra_diferencias_finitas():
    """λ=(1,2,3), k=2: gradiente vs diferencias centradas a 1e−8"""
    jet = qk_gradient([1.0, 2.0, 3.0], 2)
    fd = fd_gradient(lambda x: qk_quotient(x, 2), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(jet.gradient, fd, rtol=1e-8)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_gradiente_identidad_de_euler(n, rng):
    """Σ λ_i ∂_i Q_k = Q_k a 1e−10"""
    for lam in rng.uniform(0.1, 5.0, size=(100, n)):
        for k in range(1, n + 1):
            jet = qk_gradient(lam, k)
            assert jet.euler_defect(lam) <= 1e-10 * abs(jet.value)
            assert np.all(jet.gradient >= 0.0)


def test_gradiente_umbilico_suma():
    """En λ = 1: Σ_p ∂_p Q_k = (n−k+1)/k"""
    for n in (3, 5):
        for k in range(1, n + 1):
            assert qk_gradient(np.ones(n), k).gradient.sum() == pytest.approx((n - k + 1) / k, rel=1e-13)


@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_cota_de_dieter(n, rng):
    """∂_p Q_k >= n/(k(n−k+1))·(S_{k−1,p}/S_{k−1})² en muestras positivas"""
    for lam in rng.uniform(0.05, 8.0, size=(200, n)):
        for k in range(1, n + 1):
            grad = qk_gradient(lam, k).gradient
            bound = dieter_lower_bound(lam, k)
            assert np.all(grad >= bound - 1e-12 * np.maximum(1.0, bound))


def test_cota_de_dieter_con_oraculo():
    """Los dos lados de la cota evaluados por enumeración coinciden con los del módulo"""
    lam = np.array([0.5, 1.0, 2.0, 4.0])
    k, n = 3, 4
    s_km1 = subset_symmetric(lam, k - 1)
    for p in range(n):
        rest = np.delete(lam, p)
        expected = n / (k * (n - k + 1)) * (subset_symmetric(rest, k - 1) / s_km1) ** 2
        assert dieter_lower_bound(lam, k)[p] == pytest.approx(expected, rel=1e-12)


# ========================================
# TESTS DESIGUALDADES
# ========================================

def test_identidad_positividad_umbilico():
    """En λ = 1 se da la igualdad lhs = rhs = (n−k+1)/k"""
    lhs, rhs = positivity_identity_check(np.ones(4), 2)
    assert lhs == pytest.approx(1.5, rel=1e-13)
    assert rhs == pytest.approx(1.5, rel=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_identidad_positividad_muestras(n, rng):
    """lhs >= rhs en muestras positivas"""
    for lam in rng.uniform(0.05, 10.0, size=(300, n)):
        for k in range(1, n + 1):
            lhs, rhs = positivity_identity_check(lam, k)
            assert lhs >= rhs - 1e-10 * rhs


def test_identidad_positividad_epsilon():
    """λ = (ε, 1, …, 1) con ε → 0, k < n"""
    for eps in (1e-1, 1e-3, 1e-6):
        lhs, rhs = positivity_identity_check([eps, 1.0, 1.0, 1.0], 3)
        assert lhs >= rhs - 1e-12


def test_identidad_positividad_rechaza_ceros():
    """λ con ceros no está en el dominio"""
    with pytest.raises(DomainError):
        positivity_identity_check([0.0, 1.0], 1)


def test_concavidad(rng):
    """Q_k(tλ + (1−t)μ) >= tQ_k(λ) + (1−t)Q_k(μ) − 1e−10"""
    for _ in range(200):
        lam, mu = rng.uniform(0.1, 5.0, size=(2, 5))
        t = rng.uniform()
        assert concavity_gap(lam, mu, t, 3) >= -1e-10


# ========================================
# TESTS FORMA EN RADIOS
# ========================================

def test_velocidad_en_radios_coincide_con_curvaturas(rng):
    """Q_k y D_p = λ_p² ∂Q_k/∂λ_p desde radios"""
    radii = rng.uniform(0.5, 2.0, size=(10, 3))
    speed, diffusion = speed_from_radii_batch(radii, 2)
    q, grad = qk_gradient_batch(1.0 / radii, 2)
    np.testing.assert_allclose(speed, q, rtol=1e-12)
    np.testing.assert_allclose(diffusion, grad / radii ** 2, rtol=1e-12)


def test_velocidad_en_radios_radio_casi_nulo():
    """Un radio diminuto (curvatura enorme) usa la forma en radios sin desbordar"""
    speed, diffusion = speed_from_radii_batch(np.array([[1e-9, 1.0, 1.0]]), 2)
    # S_1(r)/S_2(r) → 2/1 cuando r₁ → 0
    assert speed[0] == pytest.approx((2.0 + 1e-9) / (1.0 + 2e-9), rel=1e-9)
    assert np.all(np.isfinite(diffusion))


# ========================================
# TESTS ORÁCULO COMPLETO (10⁴ MUESTRAS POR n)
# ========================================

def _five_point_gradient(lams: np.ndarray, k: int, step: float = 1e-4) -> np.ndarray:
    """∂Q_k/∂λ_p por fila con el esténcil de cinco puntos y paso relativo."""
    out = np.empty_like(lams)
    for p in range(lams.shape[1]):
        h = step * np.maximum(1.0, lams[:, p])
        shifted = []
        for s in (2.0, 1.0, -1.0, -2.0):
            moved = lams.copy()
            moved[:, p] += s * h
            shifted.append(qk_batch(moved, k))
        out[:, p] = (-shifted[0] + 8.0 * shifted[1] - 8.0 * shifted[2] + shifted[3]) / (12.0 * h)
    return out


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 9))
def test_oraculo_completo_diez_mil_muestras(n, rng):
    """10⁴ λ positivos por n: Q_k (1e−12), gradiente (1e−8), positividad y cota de Dieter"""
    samples = 10_000
    lams = rng.uniform(0.05, 10.0, size=(samples, n))
    for k in range(1, n + 1):
        values, grad = qk_gradient_batch(lams, k)
        s_km1 = subset_symmetric_batch(lams, k - 1)
        np.testing.assert_allclose(values, subset_symmetric_batch(lams, k) / s_km1, rtol=1e-12)

        fd = _five_point_gradient(lams, k)
        scale = np.max(np.abs(grad), axis=1)
        assert np.all(np.max(np.abs(grad - fd), axis=1) <= 1e-8 * scale)

        lhs = np.sum(grad * lams ** 2, axis=1)
        rhs = k / (n - k + 1) * values ** 2
        assert np.all(lhs >= rhs - 1e-10 * rhs)

        for p in range(n):
            rest = np.delete(lams, p, axis=1)
            bound = n / (k * (n - k + 1)) * (subset_symmetric_batch(rest, k - 1) / s_km1) ** 2
            assert np.all(grad[:, p] >= bound - 1e-12 * np.maximum(1.0, bound))


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
