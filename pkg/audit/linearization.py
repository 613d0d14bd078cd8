# audit/linearization.py
"""
Auditoría numérica de la linealización de la ecuación en la carta f:

    f_t = R(jet),   R = −Q_k(autovalores de b),   b = c·f_z

Los coeficientes a_ij = ∂R/∂f_ij se obtienen por dos métodos independientes
(menores de b − λI y diferencias finitas del lado derecho completo) y su
acuerdo es el certificado de corrección.
"""

from dataclasses import dataclass, replace
from itertools import product
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from config import ASYMPTOTIC_Z_MAX, FD_REL_STEP, REPEATED_EIG_TOL
from flatside.charts import FJet, assemble_b_matrix
from flatside.holder import SingularMetricPoint
from flows.flowcore import FlowTrace, diffusion_tensor
from geometry.convexgeom import principal_radii, radii_matrix, rebase
from geometry.errors import DomainError, RepeatedEigenvalueError
from geometry.symfun import qk_gradient, qk_gradient_batch, qk_quotient, speed_from_radii_batch

try:
    from utils.logger import get_logger
    logger = get_logger('linearization')
except ImportError:
    import logging
    logger = logging.getLogger('linearization')

Method = Literal["minors", "finite-difference"]

# ========================================
# ACCESO A LAS ENTRADAS DEL JET
# ========================================

def second_order_matrix(jet: FJet) -> np.ndarray:
    """F = [[f_zz, f_zx], [f_zx, f_xx]] con el índice 0 para z."""
    m = jet.f_x.size
    out = np.empty((m + 1, m + 1))
    out[0, 0] = jet.f_zz
    out[0, 1:] = jet.f_zx
    out[1:, 0] = jet.f_zx
    out[1:, 1:] = jet.f_xx
    return out


def with_second_order(jet: FJet, F: np.ndarray) -> FJet:
    F = 0.5 * (F + F.T)
    return replace(jet, f_zz=float(F[0, 0]), f_zx=F[0, 1:].copy(), f_xx=F[1:, 1:].copy())


def first_order_vector(jet: FJet) -> np.ndarray:
    return np.concatenate([[jet.f_z], jet.f_x])


def with_first_order(jet: FJet, d: np.ndarray) -> FJet:
    return replace(jet, f_z=float(d[0]), f_x=np.asarray(d[1:], dtype=float).copy())


def rhs(jet: FJet, k: int) -> float:
    """R(jet) = −Q_k(eig b)."""
    eig = assemble_b_matrix(jet).eigenvalues()
    return -qk_quotient(eig, k)


def b_derivative(jet: FJet, l: int, m: int) -> np.ndarray:
    """
    ∂b/∂(entrada f_lm) exacta: b es lineal en F con coeficientes que sólo
    dependen del primer orden, así que basta evaluar b con F = E_lm + E_ml.
    """
    n = jet.f_x.size + 1
    unit = np.zeros((n, n))
    unit[l, m] = 1.0
    unit[m, l] = 1.0
    if l == m:
        unit[l, l] = 1.0
    return assemble_b_matrix(with_second_order(jet, unit)).b

# ========================================
# COEFICIENTES
# ========================================

@dataclass
class LinearizedCoefficients:
    """Operador linealizado Σ a_ij ∂_ij + Σ b_i ∂_i + c."""

    a: np.ndarray
    b: np.ndarray
    c: float
    at: SingularMetricPoint
    k: int
    method: str
    eigenvalues: np.ndarray

    @property
    def min_ellipticity(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.a + self.a.T)).min())

    def as_dict(self) -> dict:
        return {
            "a": self.a.tolist(), "b": self.b.tolist(), "c": self.c, "k": self.k,
            "method": self.method, "z": self.at.z, "xbar": list(self.at.xbar),
            "eigenvalues": self.eigenvalues.tolist(),
        }


def _cofactors(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    out = np.empty_like(mat)
    for i, j in product(range(n), range(n)):
        minor = np.delete(np.delete(mat, i, axis=0), j, axis=1)
        out[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if minor.size else 1.0)
    return out


def eigenvalue_derivatives(b: np.ndarray, db: np.ndarray) -> np.ndarray:
    """
    ∂λ_p = Σ_ij M^{ij} ∂b_ij / Σ_i M^{ii}, M cofactores de b − λ_p I.

    Raises:
        RepeatedEigenvalueError: autovalores a menos de REPEATED_EIG_TOL
    """
    eig = np.linalg.eigvalsh(b)[::-1]
    scale = max(1.0, float(np.max(np.abs(eig))))
    gaps = np.abs(np.diff(np.sort(eig)))
    if gaps.size and gaps.min() < REPEATED_EIG_TOL * scale:
        raise RepeatedEigenvalueError(f"autovalores repetidos: separación {gaps.min():.3e}")
    out = np.empty(eig.size)
    for p, lam in enumerate(eig):
        cof = _cofactors(b - lam * np.eye(b.shape[0]))
        out[p] = float(np.sum(cof * db) / np.trace(cof))
    return out


def _first_order_fd(jet: FJet, k: int) -> np.ndarray:
    d = first_order_vector(jet)
    out = np.empty(d.size)
    for i in range(d.size):
        h = FD_REL_STEP * (1.0 + abs(d[i]))
        up, down = d.copy(), d.copy()
        up[i] += h
        down[i] -= h
        out[i] = (rhs(with_first_order(jet, up), k) - rhs(with_first_order(jet, down), k)) / (2.0 * h)
    return out


def linearized_coefficients(jet: FJet, k: int, method: Method = "minors") -> LinearizedCoefficients:
    """
    a_ij = ∂R/∂f_ij (para i ≠ j la mitad de la derivada respecto a la entrada
    simétrica), b_i = ∂R/∂f_i por diferencias centradas y c = 0 (R no depende de f).
    """
    n = jet.f_x.size + 1
    if not 1 <= k <= n:
        raise DomainError(f"k={k} fuera de [1, {n}]")
    bmat = assemble_b_matrix(jet)
    eig = bmat.eigenvalues()
    a = np.zeros((n, n))

    if method == "minors":
        qk = qk_gradient(eig, k)
        for l in range(n):
            for m in range(l, n):
                dlam = eigenvalue_derivatives(bmat.b, b_derivative(jet, l, m))
                value = -float(qk.gradient @ dlam)
                a[l, m] = a[m, l] = value if l == m else 0.5 * value
    elif method == "finite-difference":
        F = second_order_matrix(jet)
        for l in range(n):
            for m in range(l, n):
                h = FD_REL_STEP * (1.0 + abs(F[l, m]))
                up, down = F.copy(), F.copy()
                up[l, m] += h
                down[l, m] -= h
                if l != m:
                    up[m, l] += h
                    down[m, l] -= h
                value = (rhs(with_second_order(jet, up), k) - rhs(with_second_order(jet, down), k)) / (2.0 * h)
                a[l, m] = a[m, l] = value if l == m else 0.5 * value
    else:
        raise DomainError(f"método desconocido: {method!r}")

    return LinearizedCoefficients(
        a=a, b=_first_order_fd(jet, k), c=0.0,
        at=SingularMetricPoint(z=jet.z, xbar=tuple(jet.xbar)), k=k, method=method, eigenvalues=eig,
    )


def dual_method_agreement(jet: FJet, k: int) -> float:
    """max |a_minors − a_fd| / max |a_minors|."""
    minors = linearized_coefficients(jet, k, "minors").a
    fd = linearized_coefficients(jet, k, "finite-difference").a
    return float(np.max(np.abs(minors - fd)) / max(np.max(np.abs(minors)), 1e-300))

# ========================================
# CHEQUEOS DE ESCALA
# ========================================

class SpeedDerivativeReport(BaseModel):
    slope_lambda1: float = Field(description="pendiente log-log de ∂Q_k/∂λ₁ frente a z")
    C1: float = Field(description="min_{p>=2} ∂Q_k/∂λ_p")
    C2: float = Field(description="max_{p>=2} ∂Q_k/∂λ_p")
    window: List[float]


def _window(z: np.ndarray, z_max: float) -> np.ndarray:
    mask = z <= z_max
    return mask if mask.sum() >= 3 else np.ones_like(z, dtype=bool)


def check_speed_derivative_bounds(lambda_series: Sequence[Sequence[float]], z: Sequence[float], k: int,
                                  z_max: float = ASYMPTOTIC_Z_MAX) -> SpeedDerivativeReport:
    """
    Ajusta ∂Q_k/∂λ₁ ~ z (λ₁ la mayor) en la ventana z <= z_max y acota ∂Q_k/∂λ_p, p >= 2.
    """
    lams = -np.sort(-np.asarray(lambda_series, dtype=float), axis=1)
    z = np.asarray(z, dtype=float)
    _, grad = qk_gradient_batch(lams, k)
    mask = _window(z, z_max)
    slope = float(np.polyfit(np.log(z[mask]), np.log(grad[mask, 0]), 1)[0]) if np.all(grad[:, 0] > 0) else float("nan")
    rest = grad[:, 1:]
    return SpeedDerivativeReport(
        slope_lambda1=slope,
        C1=float(rest.min()) if rest.size else float("nan"),
        C2=float(rest.max()) if rest.size else float("nan"),
        window=[float(z[mask].min()), float(z[mask].max())],
    )


class A11Report(BaseModel):
    exponent: float
    r_squared: float
    inconclusive: bool
    min_ratio: float = Field(description="min (a₁₁/z²) / (1/(2a(z)²)), a(z) = √z·f_z")
    lower_bound_holds: bool


def check_a11_scaling(jets: Sequence[FJet], k: int, method: Method = "minors",
                      z_max: float = ASYMPTOTIC_Z_MAX) -> A11Report:
    """Exponente de a₁₁ ~ z^e (esperado 2) y cota inferior de a₁₁/z² frente a 1/(2a(z)²)."""
    z = np.array([j.z for j in jets])
    a11 = np.array([linearized_coefficients(j, k, method).a[0, 0] for j in jets])
    mask = _window(z, z_max)
    x, y = np.log(z[mask]), np.log(a11[mask])
    coeffs = np.polyfit(x, y, 1)
    fitted = np.polyval(coeffs, x)
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    a_z = np.array([np.sqrt(j.z) * j.f_z for j in jets])
    ratio = (a11 / z ** 2) / (1.0 / (2.0 * a_z ** 2))
    report = A11Report(
        exponent=float(coeffs[0]), r_squared=r2, inconclusive=r2 < 0.99,
        min_ratio=float(ratio[mask].min()), lower_bound_holds=bool(ratio[mask].min() >= 0.9),
    )
    logger.info(f"✅ a₁₁ ~ z^{report.exponent:.4f} (R²={r2:.5f})")
    return report


class AiiReport(BaseModel):
    min_aii: float
    delta: float
    holds: bool
    per_z: List[float]


def check_aii_lower_bound(jets: Sequence[FJet], k: int, method: Method = "minors") -> AiiReport:
    """min sobre el barrido y sobre i >= 2 de a_ii; se reporta, nunca se asevera."""
    per_z = []
    for jet in jets:
        a = linearized_coefficients(jet, k, method).a
        per_z.append(float(np.min(np.diag(a)[1:])))
    low = min(per_z)
    holds = low > 1e-10
    if not holds:
        logger.warning(f"⚠️ a_ii sin cota inferior positiva: min={low:.3e}")
    return AiiReport(min_aii=low, delta=max(low, 0.0), holds=holds, per_z=per_z)


class StructureReport(BaseModel):
    scaled_maxima: Dict[str, float]
    bounded: Dict[str, bool]


def degenerate_structure_check(jets: Sequence[FJet], k: int) -> StructureReport:
    """a₁₁/z², a₁ᵢ/z, a_ij, b₁/z y b_i acotados a lo largo del barrido."""
    series: Dict[str, List[float]] = {"a11/z2": [], "a1i/z": [], "aij": [], "b1/z": [], "bi": []}
    order = sorted(jets, key=lambda j: -j.z)
    for jet in order:
        coeffs = linearized_coefficients(jet, k)
        z = jet.z
        series["a11/z2"].append(abs(coeffs.a[0, 0]) / z ** 2)
        series["a1i/z"].append(float(np.max(np.abs(coeffs.a[0, 1:]))) / z if coeffs.a.shape[0] > 1 else 0.0)
        series["aij"].append(float(np.max(np.abs(coeffs.a[1:, 1:]))))
        series["b1/z"].append(abs(coeffs.b[0]) / z)
        series["bi"].append(float(np.max(np.abs(coeffs.b[1:]))) if coeffs.b.size > 1 else 0.0)
    maxima = {name: float(max(values)) for name, values in series.items()}
    # acotado: el tramo final (z pequeño) no crece más que un factor 2 sobre la mediana
    bounded = {name: bool(values[-1] <= 2.0 * float(np.median(values)) + 1e-12) for name, values in series.items()}
    return StructureReport(scaled_maxima=maxima, bounded=bounded)

# ========================================
# RESIDUOS DE LAS ECUACIONES DE EVOLUCIÓN
# ========================================

class ResidualReport(BaseModel):
    t: float
    dt: float
    residual_speed: float = Field(description="sup |∂_t Q − Σ D_p(∇²Q + Q)_pp| relativo")
    residual_mean_curvature: float
    residual_metric: float


def _nodal(surface, k):
    w = radii_matrix(surface)
    radii = principal_radii(surface, w)
    speed, diffusion = speed_from_radii_batch(radii, k)
    return w, radii, speed, diffusion


def residual_evolution_check(trace: FlowTrace, t_mid: Optional[float] = None) -> ResidualReport:
    """
    Derivadas temporales centradas de Q_k, H y g = W² (gauge de la aplicación de Gauss)
    frente a los lados derechos ensamblados con datos espaciales:

        ∂_t Q = Σ_ab Φ_ab (∇²Q)_ab + tr(Φ)·Q
        ∂_t H = tr(W⁻²(∇²Q + Q·I))
        ∂_t W² = −2Q·W − (W∇²Q + ∇²Q·W)
    """
    times = sorted(trace.snapshots)
    if len(times) < 3:
        raise DomainError("se necesitan al menos 3 snapshots consecutivos")
    if t_mid is None:
        mid = len(times) // 2
    else:
        mid = int(np.argmin([abs(t - t_mid) for t in times]))
        mid = min(max(mid, 1), len(times) - 2)
    t0, t1, t2 = times[mid - 1], times[mid], times[mid + 1]
    center = trace.snapshots[t1]
    before = rebase(trace.snapshots[t0], center.origin)
    after = rebase(trace.snapshots[t2], center.origin)
    grid = center.grid
    k = trace.k

    w0, _, q0, _ = _nodal(before, k)
    w1, _, q1, d1 = _nodal(center, k)
    w2, _, q2, _ = _nodal(after, k)
    h0, h2 = t1 - t0, t2 - t1

    def ddt(x0, x1, x2):
        # derivada centrada en malla no uniforme
        return (h0 ** 2 * x2 - h2 ** 2 * x0 + (h2 ** 2 - h0 ** 2) * x1) / (h0 * h2 * (h0 + h2))

    hess_q = grid.hessian(q1)
    n = grid.n
    phi = diffusion_tensor(grid, w1, d1)

    forcing = hess_q + q1[:, None, None] * np.eye(n)[None]
    rhs_q = np.einsum("iab,iab->i", phi, forcing)
    lhs_q = ddt(q0, q1, q2)

    inv = np.linalg.inv(w1)
    rhs_h = np.einsum("iab,ibc,ica->i", inv, inv, forcing)
    lhs_h = ddt(np.trace(np.linalg.inv(w0), axis1=1, axis2=2),
                np.trace(inv, axis1=1, axis2=2),
                np.trace(np.linalg.inv(w2), axis1=1, axis2=2))

    g0, g1, g2 = (np.einsum("iab,ibc->iac", w, w) for w in (w0, w1, w2))
    rhs_g = -2.0 * q1[:, None, None] * w1 - (np.einsum("iab,ibc->iac", w1, hess_q) + np.einsum("iab,ibc->iac", hess_q, w1))
    lhs_g = ddt(g0, g1, g2)

    def rel(lhs, rhs_):
        return float(np.max(np.abs(lhs - rhs_)) / max(float(np.max(np.abs(rhs_))), 1e-300))

    report = ResidualReport(
        t=t1, dt=max(h0, h2),
        residual_speed=rel(lhs_q, rhs_q),
        residual_mean_curvature=rel(lhs_h, rhs_h),
        residual_metric=rel(lhs_g, rhs_g),
    )
    logger.info(
        f"✅ Residuos en t={t1:.6g}: Q={report.residual_speed:.3e}, "
        f"H={report.residual_mean_curvature:.3e}, g={report.residual_metric:.3e}"
    )
    return report
