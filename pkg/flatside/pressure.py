# flatside/pressure.py
"""
Problema de frontera libre con lado plano en coordenadas de presión.

La parte inferior del cuerpo es el grafo radial x_{n+1} = u(r) sobre el plano
del lado plano; u ≡ 0 en r <= ρ y g = √u es la presión. En la región positiva

    u_t = v·Q_k(κ_r, κ_τ, …, κ_τ),   κ_r = u_rr/v³,  κ_τ = u_r/(r v),  v = √(1+u_r²)

y la interfaz Γ = {r = ρ} avanza con la velocidad normal u_t/u_r extrapolada
desde la región resuelta.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from config import CFL_DIFFUSION, INTERFACE_FIT_NODES
from geometry.errors import (
    DomainError, OutOfScopeError, QkLabError, ResolutionError, StarConditionError
)
from geometry.symfun import qk_gradient_batch

try:
    from utils.logger import get_logger, log_system_event
    logger = get_logger('flatside')
except ImportError:
    import logging
    logger = logging.getLogger('flatside')

    def log_system_event(event_type, details, logger_name='system'):
        logger.info(f"[{event_type.upper()}] {details}")

STOP_T_END = "T_END"
STOP_INTERFACE_CLOSED = "INTERFACE_CLOSED"
STOP_STAR_ALARM = "STAR_ALARM"
STOP_DEGENERATE = "DEGENERATE"
STOP_MAX_STEPS = "MAX_STEPS"

# ========================================
# PERFIL DE PRESIÓN
# ========================================

@dataclass(frozen=True)
class PressureProfile:
    """Presión g(r, t) = √u sobre una malla radial centrada en celda."""

    n: int
    k: int
    r: np.ndarray
    g: np.ndarray
    t: float = 0.0
    rho: float = 0.0
    lambda_star: Optional[float] = None

    def __post_init__(self):
        if self.n < 2 or not 1 <= self.k <= self.n:
            raise DomainError(f"(n, k) = ({self.n}, {self.k}) fuera de rango")
        r = np.asarray(self.r, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if r.shape != g.shape or r.ndim != 1 or r.size < 8:
            raise DomainError("r y g deben ser vectores de igual longitud (>= 8)")
        if np.any(g < 0):
            raise DomainError("la presión g debe ser no negativa")
        if self.rho < 0:
            raise DomainError("ρ debe ser no negativo")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "g", g)

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def u(self) -> np.ndarray:
        return self.g ** 2

    @property
    def positive(self) -> np.ndarray:
        return self.r > self.rho


def radial_grid(r_max: float, nodes: int) -> np.ndarray:
    """r_i = (i+½)·Δr sobre [0, r_max]."""
    if r_max <= 0 or nodes < 8:
        raise DomainError("malla radial inválida")
    dr = r_max / nodes
    return (np.arange(nodes) + 0.5) * dr


def lens_profile(n: int, k: int, radius: float, flat_radius: float, nodes: int = 200,
                 reach: float = 0.7) -> PressureProfile:
    """
    Parte inferior de disco(ρ₀) ⊕ bola(R): u = R − √(R² − (r−ρ₀)²) para r > ρ₀.

    El dominio llega hasta ρ₀ + reach·R, antes de la tangente vertical.
    """
    if radius <= 0 or flat_radius <= 0 or not 0 < reach < 1:
        raise DomainError("lente con parámetros inválidos")
    r = radial_grid(flat_radius + reach * radius, nodes)
    s = np.clip(r - flat_radius, 0.0, None)
    u = radius - np.sqrt(radius ** 2 - s ** 2)
    return PressureProfile(n=n, k=k, r=r, g=np.sqrt(u), rho=float(flat_radius))


def sphere_profile(n: int, k: int, radius: float, nodes: int = 200, reach: float = 0.7) -> PressureProfile:
    """Casquete inferior de una esfera: sin lado plano (ρ = 0)."""
    if radius <= 0:
        raise DomainError("el radio debe ser positivo")
    r = radial_grid(reach * radius, nodes)
    u = radius - np.sqrt(radius ** 2 - r ** 2)
    return PressureProfile(n=n, k=k, r=r, g=np.sqrt(u), rho=0.0)


def profile_from_function(n: int, k: int, r_max: float, nodes: int, fn, rho: float) -> PressureProfile:
    """Perfil a partir de g = fn(r); se anula en r <= ρ."""
    r = radial_grid(r_max, nodes)
    g = np.where(r > rho, np.asarray(fn(r), dtype=float), 0.0)
    return PressureProfile(n=n, k=k, r=r, g=g, rho=float(rho))

# ========================================
# CONDICIÓN (★)
# ========================================

class StarReport(BaseModel):
    """|Dg| y Hessiano tangencial g_r/r de la presión en Γ."""

    empty: bool = False
    min_grad: Optional[float] = None
    min_hess_eig: Optional[float] = None
    lambda_star: Optional[float] = Field(default=None, description="min(min_grad, min_hess_eig)")
    certified: bool = False


def _interface_fit(p: PressureProfile) -> Tuple[float, float]:
    """g ≈ α(r−ρ) + β(r−ρ)² por los dos primeros nodos positivos; devuelve (α, β)."""
    idx = np.flatnonzero(p.positive & (p.g > 0))
    if idx.size < 3:
        raise ResolutionError(f"sólo {idx.size} nodos con g > 0 más allá de ρ={p.rho:.4g}")
    d = p.r[idx[:2]] - p.rho
    system = np.array([[d[0], d[0] ** 2], [d[1], d[1] ** 2]])
    alpha, beta = np.linalg.solve(system, p.g[idx[:2]])
    return float(alpha), float(beta)


def check_star(p: PressureProfile, lam: float) -> StarReport:
    """
    Certifica o refuta |Dg| >= λ y (g_ij) >= λ en Γ.

    Bajo simetría axial el Hessiano tangencial es (g_r/r)·I_{n−1}.

    Raises:
        ResolutionError: menos de 3 nodos con g > 0 tras ρ
    """
    if p.rho <= 0:
        return StarReport(empty=True)
    alpha, _ = _interface_fit(p)
    min_grad = abs(alpha)
    min_hess = alpha / p.rho
    star = min(min_grad, min_hess)
    return StarReport(min_grad=min_grad, min_hess_eig=min_hess, lambda_star=star, certified=star >= lam)

# ========================================
# EVOLUCIÓN
# ========================================

@dataclass
class PressureRates:
    index: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    dt_limit: float
    speed: float
    slope: float


def _extended_u(p: PressureProfile, slope: float) -> np.ndarray:
    """u con fantasmas: g lineal con signo en r <= ρ, reflexión par en r = 0, extrapolación cuadrática afuera."""
    g = p.g.copy()
    if p.rho > 0:
        flat = ~p.positive
        g[flat] = slope * (p.r[flat] - p.rho)
    u = g ** 2
    ext = np.empty(u.size + 2)
    ext[1:-1] = u
    ext[0] = u[0]
    ext[-1] = 3.0 * u[-1] - 3.0 * u[-2] + u[-3]
    return ext


def pressure_rates(p: PressureProfile, cfl: float) -> PressureRates:
    slope = _interface_fit(p)[0] if p.rho > 0 else 0.0
    ext = _extended_u(p, slope)
    dr = p.dr
    u_r_all = (ext[2:] - ext[:-2]) / (2.0 * dr)
    u_rr_all = (ext[2:] - 2.0 * ext[1:-1] + ext[:-2]) / dr ** 2

    index = np.flatnonzero(p.positive)
    u_r, u_rr, r = u_r_all[index], u_rr_all[index], p.r[index]
    v = np.sqrt(1.0 + u_r ** 2)
    lams = np.empty((index.size, p.n))
    lams[:, 0] = u_rr / v ** 3
    lams[:, 1:] = (u_r / (r * v))[:, None]
    q, grad = qk_gradient_batch(lams, p.k)
    u_t = v * q

    radial = grad[:, 0] / v ** 2
    tangential = grad[:, 1:].sum(axis=1)
    stiffness = float(np.max(radial + tangential * dr / r))
    dt_limit = cfl * dr ** 2 / (2.0 * stiffness) if stiffness > 0 else math.inf

    speed = 0.0
    if p.rho > 0:
        resolved = np.flatnonzero(r >= p.rho + 0.5 * dr)[:INTERFACE_FIT_NODES]
        if resolved.size < 2:
            raise ResolutionError("interfaz sin nodos resueltos para extrapolar la velocidad")
        normal_speed = u_t[resolved] / u_r[resolved]
        if resolved.size >= 3:
            coeffs = np.polyfit(r[resolved] - p.rho, normal_speed, 1)
            speed = float(coeffs[-1])
        else:
            speed = float(normal_speed[0])
        if speed > 0:
            dt_limit = min(dt_limit, 0.5 * dr / speed)
    return PressureRates(index, u_t, u_r, dt_limit, speed, slope)


def stable_dt(p: PressureProfile, cfl: float = CFL_DIFFUSION) -> float:
    """Paso explícito estable: límite difusivo y avance de ρ <= Δr/2."""
    return pressure_rates(p, cfl).dt_limit


def evolve_pressure(p: PressureProfile, dt: Optional[float] = None, cfl: float = CFL_DIFFUSION) -> PressureProfile:
    """
    Un paso explícito: u += dt·v·Q_k en la región positiva, ρ ← ρ − dt·V y los
    nodos expuestos reciben g = α(r − ρ_nuevo).

    Raises:
        ResolutionError: interfaz no resoluble
        DegenerateDenominatorError: S_{k−1} degenerado en la región positiva
    """
    rates = pressure_rates(p, cfl)
    if dt is None:
        dt = rates.dt_limit
    if dt <= 0:
        raise DomainError("dt debe ser positivo")

    u = p.u.copy()
    u[rates.index] += dt * rates.u_t
    g = np.sqrt(np.clip(u, 0.0, None))

    rho = p.rho
    if p.rho > 0:
        rho = max(p.rho - dt * rates.speed, 0.0)
        exposed = (p.r > rho) & (p.r <= p.rho)
        g[exposed] = rates.slope * (p.r[exposed] - rho)
        g[p.r <= rho] = 0.0
    return replace(p, g=g, t=p.t + dt, rho=rho)

# ========================================
# TRAYECTORIA DE LA INTERFAZ
# ========================================

@dataclass
class InterfaceTrajectory:
    """ρ(t) registrado en cada paso."""

    times: List[float] = field(default_factory=list)
    rho_series: List[float] = field(default_factory=list)
    fitted_speed_constant: Optional[float] = None

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.times, self.rho_series))


@dataclass
class FlatSideRun:
    trajectory: InterfaceTrajectory
    final: PressureProfile
    star_series: List[float]
    stop_reason: str
    steps: int
    failure: Optional[Exception] = None
    star_persistence_time: float = 0.0


def run_flat_side(p: PressureProfile, t_end: float, lam: Optional[float] = None,
                  dt: Optional[float] = None, cfl: float = CFL_DIFFUSION,
                  max_steps: int = 1_000_000) -> FlatSideRun:
    """
    Evoluciona el perfil hasta t_end o hasta que la interfaz se cierra (ρ < 2Δr).

    Si λ es dado, la alarma de degeneración detiene la corrida cuando
    min(|Dg|, g_r/r) cae por debajo de λ/2.
    """
    if p.rho <= 0:
        raise DomainError("run_flat_side necesita un lado plano (ρ > 0)")
    initial = check_star(p, lam if lam is not None else 0.0)
    if lam is not None and not initial.certified:
        raise StarConditionError(
            f"(★) no se cumple en t=0: λ*={initial.lambda_star:.4g} < λ={lam}", initial, p.t
        )
    p = replace(p, lambda_star=lam if lam is not None else initial.lambda_star)

    trajectory = InterfaceTrajectory(times=[p.t], rho_series=[p.rho])
    star_series = [float(initial.lambda_star)]
    persistence = p.t
    stop, failure, steps = STOP_T_END, None, 0
    log_system_event("run_start", {"n": p.n, "k": p.k, "rho0": p.rho, "lambda": lam,
                                   "nodes": p.r.size}, logger_name='flatside')
    try:
        while p.t < t_end:
            if steps >= max_steps:
                stop = STOP_MAX_STEPS
                break
            if p.rho < 2.0 * p.dr:
                stop = STOP_INTERFACE_CLOSED
                break
            step_dt = stable_dt(p, cfl) if dt is None else dt
            step_dt = min(step_dt, t_end - p.t)
            p = evolve_pressure(p, step_dt, cfl)
            steps += 1
            trajectory.times.append(p.t)
            trajectory.rho_series.append(p.rho)
            report = check_star(p, lam if lam is not None else 0.0)
            star_series.append(float(report.lambda_star))
            if lam is not None and report.lambda_star < lam / 2.0:
                raise StarConditionError(
                    f"(★) degenerada en t={p.t:.6g}: λ*={report.lambda_star:.4g} < λ/2", report, p.t
                )
            persistence = p.t
    except StarConditionError as e:
        stop, failure = STOP_STAR_ALARM, e
        log_system_event("alarm", {"reason": STOP_STAR_ALARM, "t": p.t}, logger_name='flatside')
    except QkLabError as e:
        stop, failure = STOP_DEGENERATE, e
        log_system_event("alarm", {"reason": STOP_DEGENERATE, "detail": e}, logger_name='flatside')

    log_system_event("run_stop", {"reason": stop, "t": f"{p.t:.6g}", "steps": steps,
                                  "rho": f"{p.rho:.6g}"}, logger_name='flatside')
    return FlatSideRun(trajectory, p, star_series, stop, steps, failure, persistence)


class InterfaceLawReport(BaseModel):
    n: int
    k: int
    steps: int
    predicted_slope: float = Field(description="−2(n−k+1)/(k−1)")
    fitted_slope: float = Field(description="pendiente de ρ² frente a t")
    relative_error: float
    speed_constant: float = Field(description="−pendiente/2, comparable con (n−k+1)/(k−1)")


def predicted_interface_slope(n: int, k: int) -> float:
    """Pendiente de ρ² para una interfaz redonda S^{n−1}(ρ) que se mueve por Q_{k−1}."""
    if k < 2:
        raise OutOfScopeError("la ley de la interfaz requiere 2 <= k <= n")
    return -2.0 * (n - k + 1) / (k - 1)


def verify_interface_law(traj: InterfaceTrajectory, n: int, k: int, window: float = 1.0) -> InterfaceLawReport:
    """
    Ajusta ρ² frente a t y lo compara con −2(n−k+1)/(k−1).

    `window` es la fracción inicial del intervalo de tiempo usada en el ajuste.

    Raises:
        OutOfScopeError: k = 1
        ResolutionError: menos de 20 pasos
    """
    predicted = predicted_interface_slope(n, k)
    if not 0 < window <= 1:
        raise DomainError("window debe estar en (0, 1]")
    t = np.asarray(traj.times)
    rho = np.asarray(traj.rho_series)
    keep = t <= t[0] + window * (t[-1] - t[0])
    t, rho = t[keep], rho[keep]
    steps = t.size - 1
    if steps < 20:
        raise ResolutionError(f"la trayectoria tiene {steps} pasos; se requieren >= 20")
    slope = float(np.polyfit(t, rho ** 2, 1)[0])
    traj.fitted_speed_constant = -slope / 2.0
    error = abs(slope - predicted) / abs(predicted)
    logger.info(f"✅ Ley de interfaz (n={n}, k={k}): pendiente {slope:.6g} vs {predicted:.6g} ({100 * error:.2f}%)")
    return InterfaceLawReport(n=n, k=k, steps=steps, predicted_slope=predicted, fitted_slope=slope,
                              relative_error=error, speed_constant=-slope / 2.0)
