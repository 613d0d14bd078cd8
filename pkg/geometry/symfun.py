# geometry/symfun.py
"""
Álgebra de polinomios simétricos elementales.

S_0..S_n se obtienen en una pasada multiplicando Π(1 + λ_i x) (recurrencia
incremental, O(n²)). λ se ordena de forma descendente antes de evaluar para que
el resultado sea idéntico bit a bit bajo permutaciones.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from config import DEGENERATE_TOL, RADII_FORM_SWITCH
from geometry.errors import DegenerateDenominatorError, DomainError

ArrayLike = Union[Sequence[float], np.ndarray, "CurvatureVector"]

# ========================================
# TIPOS
# ========================================

@dataclass(frozen=True)
class CurvatureVector:
    """Curvaturas principales λ = (λ₁, …, λ_n)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).reshape(-1)
        if arr.size < 1:
            raise DomainError("CurvatureVector necesita n >= 1")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def umbilic(cls, n: int, c: float = 1.0) -> "CurvatureVector":
        return cls(np.full(n, float(c)))

    def is_convex(self) -> bool:
        return bool(np.all(self.values >= 0.0))

    def is_strictly_convex(self) -> bool:
        return bool(np.all(self.values > 0.0))


@dataclass(frozen=True)
class SymQuotientJet:
    """Q_k y su gradiente ∂Q_k/∂λ_i."""

    value: float
    gradient: np.ndarray
    k: int

    def euler_defect(self, lam: ArrayLike) -> float:
        """|Σ λ_i ∂_i Q_k − Q_k| (homogeneidad de grado 1)."""
        return abs(float(np.dot(_as_array(lam), self.gradient)) - self.value)


def _as_array(lam: ArrayLike) -> np.ndarray:
    if isinstance(lam, CurvatureVector):
        return np.asarray(lam.values, dtype=float)
    return np.asarray(lam, dtype=float).reshape(-1)


def _check_order(k: int, n: int, lowest: int = 0) -> None:
    if not isinstance(k, (int, np.integer)) or k < lowest or k > n:
        raise DomainError(f"k={k} fuera de rango [{lowest}, {n}]")

# ========================================
# NÚCLEO: RECURRENCIA INCREMENTAL
# ========================================

def _sort_desc(lams: np.ndarray) -> np.ndarray:
    return -np.sort(-lams, axis=-1)


def elementary_symmetric_batch(lams: np.ndarray) -> np.ndarray:
    """
    S_0..S_n por fila.

    Args:
        lams: array (m, n) de tuplas λ

    Returns:
        array (m, n+1) con S_j en la columna j
    """
    lams = _sort_desc(np.atleast_2d(np.asarray(lams, dtype=float)))
    m, n = lams.shape
    e = np.zeros((m, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        # e_j <- e_j + λ_i e_{j-1}, de j alto a bajo
        e[:, 1:i + 2] = e[:, 1:i + 2] + lams[:, i:i + 1] * e[:, 0:i + 1]
    return e


def elementary_symmetric_all(lam: ArrayLike) -> np.ndarray:
    """Vector (S_0, …, S_n) de una tupla λ."""
    return elementary_symmetric_batch(_as_array(lam)[None, :])[0]


def elementary_symmetric(lam: ArrayLike, k: int) -> float:
    """S_k(λ); S_0 = 1."""
    arr = _as_array(lam)
    _check_order(k, arr.size)
    return float(elementary_symmetric_all(arr)[k])


def minors_batch(lams: np.ndarray) -> np.ndarray:
    """
    S_{j,p}: polinomios simétricos con λ_p omitido.

    Returns:
        array (m, n, n+1); columna j fuera de [0, n-1] vale 0.
    """
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    m, n = lams.shape
    out = np.zeros((m, n, n + 1))
    for p in range(n):
        reduced = np.delete(lams, p, axis=1)
        if reduced.shape[1] == 0:
            out[:, p, 0] = 1.0
        else:
            out[:, p, :n] = elementary_symmetric_batch(reduced)
    return out


def elementary_symmetric_minor(lam: ArrayLike, k: int, p: int) -> float:
    """S_{k,p}(λ): S_k de λ sin la componente p."""
    arr = _as_array(lam)
    if p < 0 or p >= arr.size:
        raise DomainError(f"índice p={p} fuera de rango")
    if k < 0 or k > arr.size - 1:
        return 0.0
    return float(minors_batch(arr[None, :])[0, p, k])

# ========================================
# COCIENTES Q_k
# ========================================

def _degenerate_mask(lams: np.ndarray, denominators: np.ndarray, k: int) -> np.ndarray:
    abs_den = elementary_symmetric_batch(np.abs(lams))[:, k - 1]
    return denominators <= DEGENERATE_TOL * np.maximum(1.0, abs_den)


def qk_batch(lams: np.ndarray, k: int) -> np.ndarray:
    """Q_k = S_k/S_{k-1} por fila; lanza DegenerateDenominatorError en la primera fila degenerada."""
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    _check_order(k, lams.shape[1], lowest=1)
    e = elementary_symmetric_batch(lams)
    den = e[:, k - 1]
    bad = _degenerate_mask(lams, den, k)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise DegenerateDenominatorError(lams[row], k, den[row])
    return e[:, k] / den


def qk_quotient(lam: ArrayLike, k: int) -> float:
    """Q_k(λ) = S_k(λ)/S_{k-1}(λ), positivamente homogéneo de grado 1."""
    arr = _as_array(lam)
    _check_order(k, arr.size, lowest=1)
    return float(qk_batch(arr[None, :], k)[0])


def qk_gradient_batch(lams: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Q_k y ∂Q_k/∂λ_p por fila.

    ∂Q_k/∂λ_p = (S²_{k-1,p} − S_{k,p} S_{k-2,p}) / S²_{k-1}
    """
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    values = qk_batch(lams, k)
    den = elementary_symmetric_batch(lams)[:, k - 1]
    minors = minors_batch(lams)
    s_km1 = minors[:, :, k - 1]
    s_k = minors[:, :, k] if k <= lams.shape[1] - 1 else np.zeros_like(s_km1)
    s_km2 = minors[:, :, k - 2] if k >= 2 else np.zeros_like(s_km1)
    grad = (s_km1 ** 2 - s_k * s_km2) / (den ** 2)[:, None]
    return values, grad


def qk_gradient(lam: ArrayLike, k: int) -> SymQuotientJet:
    """Jet (Q_k, ∇Q_k) en λ."""
    arr = _as_array(lam)
    _check_order(k, arr.size, lowest=1)
    values, grad = qk_gradient_batch(arr[None, :], k)
    return SymQuotientJet(value=float(values[0]), gradient=grad[0].copy(), k=k)

# ========================================
# DESIGUALDADES
# ========================================

def dieter_lower_bound(lam: ArrayLike, k: int) -> np.ndarray:
    """Cota inferior n/(k(n−k+1)) · (S_{k-1,p}/S_{k-1})² para cada p."""
    arr = _as_array(lam)
    n = arr.size
    _check_order(k, n, lowest=1)
    den = elementary_symmetric(arr, k - 1)
    s_km1 = minors_batch(arr[None, :])[0, :, k - 1]
    return n / (k * (n - k + 1)) * (s_km1 / den) ** 2


def positivity_identity_check(lam: ArrayLike, k: int) -> Tuple[float, float]:
    """
    Devuelve (lhs, rhs) con lhs = Σ ∂_i Q_k λ_i² y rhs = k/(n−k+1) Q_k².
    El contrato es lhs >= rhs − tolerancia para λ > 0.
    """
    arr = _as_array(lam)
    if np.any(arr <= 0):
        raise DomainError("positivity_identity_check requiere λ estrictamente positivo")
    n = arr.size
    jet = qk_gradient(arr, k)
    lhs = float(np.dot(jet.gradient, arr ** 2))
    rhs = k / (n - k + 1) * jet.value ** 2
    return lhs, rhs


def concavity_gap(lam: ArrayLike, mu: ArrayLike, t: float, k: int) -> float:
    """Q_k(tλ+(1−t)μ) − tQ_k(λ) − (1−t)Q_k(μ); >= 0 por concavidad."""
    a, b = _as_array(lam), _as_array(mu)
    mid = t * a + (1.0 - t) * b
    return qk_quotient(mid, k) - t * qk_quotient(a, k) - (1.0 - t) * qk_quotient(b, k)

# ========================================
# VELOCIDAD EN FORMA DE RADIOS
# ========================================

def speed_from_radii_batch(radii: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Velocidad Q_k y coeficientes de difusión D_p = −∂Q_k/∂r_p = λ_p² ∂Q_k/∂λ_p.

    Por nodo usa la forma en curvaturas o, si min λ < RADII_FORM_SWITCH·max λ,
    la forma en radios S_{n−k}(r)/S_{n−k+1}(r).

    Args:
        radii: array (m, n) de radios principales, todos > 0

    Returns:
        (speed (m,), diffusion (m, n))
    """
    radii = np.atleast_2d(np.asarray(radii, dtype=float))
    m, n = radii.shape
    _check_order(k, n, lowest=1)
    speed = np.empty(m)
    diffusion = np.empty((m, n))

    r_min = radii.min(axis=1)
    r_max = radii.max(axis=1)
    use_radii = r_min < RADII_FORM_SWITCH * r_max

    if np.any(~use_radii):
        lam = 1.0 / radii[~use_radii]
        q, grad = qk_gradient_batch(lam, k)
        speed[~use_radii] = q
        diffusion[~use_radii] = lam ** 2 * grad

    if np.any(use_radii):
        r = radii[use_radii]
        e = elementary_symmetric_batch(r)
        minors = minors_batch(r)
        j = n - k
        num, den = e[:, j], e[:, j + 1]
        # ∂S_j(r)/∂r_p = S_{j-1,p}(r)
        d_num = minors[:, :, j - 1] if j >= 1 else np.zeros((r.shape[0], n))
        d_den = minors[:, :, j]
        speed[use_radii] = num / den
        diffusion[use_radii] = -(d_num * den[:, None] - num[:, None] * d_den) / (den ** 2)[:, None]

    return speed, diffusion
