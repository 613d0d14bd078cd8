# flows/flowcore.py
"""
Integración temporal del flujo Q_k sobre la función soporte:

    ∂h/∂t (ν) = −Q_k(λ(ν)),   λ = 1/r,  r = autovalores de ∇²h + h·I

con ν la normal exterior. Se monitorizan en cada paso 𝓕 = ⟨F, ν⟩ + 2tQ_k
(mínimo no decreciente) y max H/𝓕 (no creciente).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import (
    CFL_DIFFUSION, CFL_SAFETY, EXTINCTION_FACTOR, EXTINCTION_FIT_FRACTION,
    MONITOR_TOL, RECENTER_EVERY
)
from geometry.convexgeom import (
    SupportSurface, check_convexity, enclosed_volume, encloses, principal_radii,
    radii_matrix, rebase, recenter, steiner_point
)
from geometry.errors import (
    CFLViolationError, ConvexityLossError, DomainError, ExtinctionUnavailableError
)
from geometry.spheregrid import AxisymmetricGrid, LatLongGrid, SphereGrid
from geometry.symfun import speed_from_radii_batch

try:
    from utils.logger import get_logger, log_system_event
    logger = get_logger('flowcore')
except ImportError:
    import logging
    logger = logging.getLogger('flowcore')

    def log_system_event(event_type, details, logger_name='system'):
        logger.info(f"[{event_type.upper()}] {details}")

STOP_T_END = "T_END"
STOP_EXTINCT = "EXTINCT"
STOP_CONVEXITY = "CONVEXITY_LOSS"
STOP_CFL = "CFL_VIOLATION"
STOP_MAX_STEPS = "MAX_STEPS"

ALARM_REASONS = (STOP_CONVEXITY, STOP_CFL)

# ========================================
# CONFIGURACIÓN
# ========================================

class FlowConfig(BaseModel):
    """Parámetros de una corrida del flujo."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(description="Dimensión de la hipersuperficie", ge=2)
    k: int = Field(description="Orden del cociente Q_k = S_k/S_{k-1}", ge=1)
    dt: float = Field(description="Paso de tiempo máximo", gt=0)
    t_end: float = Field(description="Horizonte temporal", gt=0)
    grid: Literal["axisymmetric", "latlong"] = "axisymmetric"
    resolution: int = Field(default=64, ge=4, description="Latitudes de la malla (latlong usa 2× en longitud)")
    monitor_tolerance: float = Field(default=MONITOR_TOL, gt=0)
    scheme: Literal["explicit", "semi-implicit"] = "explicit"
    adaptive: bool = True
    cfl: float = Field(default=CFL_DIFFUSION, gt=0, le=1)
    cfl_safety: float = Field(default=CFL_SAFETY, gt=0)
    recenter_every: int = Field(default=RECENTER_EVERY, ge=0)
    extinction_factor: float = Field(default=EXTINCTION_FACTOR, gt=0)
    snapshot_times: List[float] = Field(default_factory=list)
    max_steps: int = Field(default=2_000_000, ge=1)

    @model_validator(mode="after")
    def _check_orders(self):
        if self.k > self.n:
            raise ValueError(f"k={self.k} debe cumplir 1 <= k <= n={self.n}")
        if self.grid == "latlong" and self.n != 2:
            raise ValueError("la malla latlong sólo existe para n = 2")
        if any(t <= 0 for t in self.snapshot_times):
            raise ValueError("snapshot_times deben ser positivos")
        return self

    def make_grid(self) -> SphereGrid:
        if self.grid == "latlong":
            return LatLongGrid(self.resolution, 2 * self.resolution)
        return AxisymmetricGrid(self.n, self.resolution)

# ========================================
# TRAZA
# ========================================

TRACE_COLUMNS = (
    "t", "F_min", "maxH_over_F", "Q_min", "Q_max", "volume", "min_radius", "asphericity", "rho"
)


@dataclass
class FlowTrace:
    """Series por paso de una corrida; todas de igual longitud."""

    n: int
    k: int
    times: List[float] = field(default_factory=list)
    F_min_series: List[float] = field(default_factory=list)
    H_over_F_max_series: List[float] = field(default_factory=list)
    Q_min_series: List[float] = field(default_factory=list)
    Q_max_series: List[float] = field(default_factory=list)
    volume_series: List[float] = field(default_factory=list)
    min_radius_series: List[float] = field(default_factory=list)
    asphericity: List[float] = field(default_factory=list)
    rho_series: List[float] = field(default_factory=list)
    snapshots: Dict[float, SupportSurface] = field(default_factory=dict)
    recenterings: List[Tuple[float, List[float]]] = field(default_factory=list)
    initial: Optional[SupportSurface] = None
    final: Optional[SupportSurface] = None
    stop_reason: Optional[str] = None
    failure: Optional[Exception] = None
    monitor_violations: int = 0
    steps: int = 0
    speed_bound: float = math.inf

    def __len__(self) -> int:
        return len(self.times)

    def rows(self) -> List[Tuple[float, ...]]:
        return list(zip(
            self.times, self.F_min_series, self.H_over_F_max_series, self.Q_min_series,
            self.Q_max_series, self.volume_series, self.min_radius_series,
            self.asphericity, self.rho_series,
        ))

    def snapshot_at(self, t: float, rel_tol: float = 1e-12) -> SupportSurface:
        for ts, surface in self.snapshots.items():
            if abs(ts - t) <= rel_tol * max(1.0, abs(t)):
                return surface
        raise KeyError(f"no hay snapshot en t={t}")

    @property
    def speed_bound_ratio(self) -> float:
        """max Q_max / (2(n−k+1)/(kδ)); diagnóstico, nunca se asevera."""
        if not self.Q_max_series or not math.isfinite(self.speed_bound):
            return math.nan
        return max(self.Q_max_series) / self.speed_bound

    def summary(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "steps": self.steps,
            "t_final": self.times[-1] if self.times else 0.0,
            "stop_reason": self.stop_reason,
            "failure": str(self.failure) if self.failure else None,
            "monitor_violations": self.monitor_violations,
            "recenterings": len(self.recenterings),
            "asphericity_final": self.asphericity[-1] if self.asphericity else None,
            "min_radius_final": self.min_radius_series[-1] if self.min_radius_series else None,
            "speed_bound": self.speed_bound,
            "speed_bound_ratio": self.speed_bound_ratio,
        }

# ========================================
# EVALUACIÓN NODAL
# ========================================

@dataclass
class _NodalState:
    matrix: np.ndarray
    radii: np.ndarray
    speed: np.ndarray
    diffusion: np.ndarray


def _evaluate(surface: SupportSurface, k: int, t: Optional[float] = None) -> _NodalState:
    w = radii_matrix(surface)
    radii = principal_radii(surface, w)
    check_convexity(radii, t)
    speed, diffusion = speed_from_radii_batch(radii, k)
    return _NodalState(w, radii, speed, diffusion)


def mean_curvature_constant(n: int, k: int) -> float:
    """C₂ = n·k/(n−k+1): en la esfera H = C₂·Q_k exactamente."""
    return n * k / (n - k + 1)


def sphere_extinction_time(n: int, k: int, radius: float) -> float:
    """T = k·R₀²/(2(n−k+1)) de la ley radial dR/dt = −(n−k+1)/(kR)."""
    return k * radius ** 2 / (2.0 * (n - k + 1))


def sphere_radius(n: int, k: int, radius: float, t: float) -> float:
    """R(t) = √(R₀² − 2(n−k+1)t/k), 0 tras la extinción."""
    return math.sqrt(max(radius ** 2 - 2.0 * (n - k + 1) * t / k, 0.0))

# ========================================
# PASO TEMPORAL
# ========================================

def _displacement_limit(surface: SupportSurface, cfg: FlowConfig) -> float:
    return cfg.cfl_safety * surface.grid.spacing * float(np.mean(np.abs(surface.h)))


def _stable_dt(surface: SupportSurface, state: _NodalState, cfg: FlowConfig) -> float:
    """dt efectivo: min(dt, límite difusivo, límite de desplazamiento)."""
    dt = cfg.dt
    q_max = float(np.max(np.abs(state.speed)))
    if q_max > 0:
        dt = min(dt, _displacement_limit(surface, cfg) / q_max)
    if cfg.scheme == "explicit":
        d_max = float(np.max(state.diffusion.sum(axis=1)))
        if d_max > 0:
            dt = min(dt, cfg.cfl * surface.grid.cfl_spacing ** 2 / (2.0 * d_max))
    return dt


def diffusion_tensor(grid, matrix: np.ndarray, diffusion: np.ndarray) -> np.ndarray:
    """Φ = V diag(D) Vᵀ en el marco de la malla, (size, n, n)."""
    n = grid.n
    if grid.diagonal_frame:
        order = np.argsort(np.diagonal(matrix, axis1=1, axis2=2), axis=1)
        phi = np.zeros((grid.size, n, n))
        # diffusion viene en orden ascendente de radios
        for a in range(n):
            phi[np.arange(grid.size), order[:, a], order[:, a]] = diffusion[:, a]
        return phi
    _, vectors = np.linalg.eigh(matrix)
    return np.einsum("iap,ip,ibp->iab", vectors, diffusion, vectors)


def _linearized_operator(surface: SupportSurface, state: _NodalState) -> sp.csr_matrix:
    """A tal que δ(−Q_k) ≈ A·δh: A = Σ_ab Φ_ab ∇²_ab + tr(Φ)·I."""
    grid = surface.grid
    n = grid.n
    phi = diffusion_tensor(grid, state.matrix, state.diffusion)

    operator = sp.diags(np.trace(phi, axis1=1, axis2=2))
    for a in range(n):
        for b in range(n):
            op = grid.hessian_operator(a, b)
            if op is None:
                continue
            operator = operator + sp.diags(phi[:, a, b]) @ op
    return operator.tocsr()


def _advance(surface: SupportSurface, state: _NodalState, dt: float, cfg: FlowConfig) -> SupportSurface:
    if cfg.scheme == "explicit":
        return surface.with_h(surface.h - dt * state.speed)
    operator = _linearized_operator(surface, state)
    system = (sp.identity(surface.grid.size, format="csr") - dt * operator).tocsc()
    delta = spsolve(system, -dt * state.speed)
    return surface.with_h(surface.h + delta)


def _guard_displacement(surface: SupportSurface, state: _NodalState, dt: float, cfg: FlowConfig) -> None:
    limit = _displacement_limit(surface, cfg)
    q_max = float(np.max(np.abs(state.speed)))
    if dt * q_max > limit:
        raise CFLViolationError(dt * q_max, limit, limit / q_max)


def step(surface: SupportSurface, cfg: FlowConfig, t: Optional[float] = None,
         dt: Optional[float] = None) -> SupportSurface:
    """
    Un paso del flujo: h ← h − dt·Q_k(λ(ν)) (o su versión semi-implícita).

    Raises:
        ConvexityLossError: la entrada o el resultado tienen algún radio <= 0
        CFLViolationError: max |Δh| supera safety·espaciado·escala (sólo sin dt adaptativo)
    """
    if surface.n != cfg.n:
        raise DomainError(f"superficie de dimensión {surface.n}, configuración n={cfg.n}")
    state = _evaluate(surface, cfg.k, t)
    if dt is None:
        dt = _stable_dt(surface, state, cfg) if cfg.adaptive else cfg.dt
    if not cfg.adaptive:
        _guard_displacement(surface, state, dt, cfg)
    result = _advance(surface, state, dt, cfg)
    check_convexity(principal_radii(result), None if t is None else t + dt)
    return result

# ========================================
# CORRIDA COMPLETA
# ========================================

def _record(trace: FlowTrace, surface: SupportSurface, state: _NodalState, t: float,
            origin0: np.ndarray, tol: float) -> float:
    """Añade una fila a la traza y devuelve ρ (min h respecto al punto de Steiner)."""
    grid = surface.grid
    h_rel = surface.h + grid.normals() @ (surface.origin - origin0)
    monitor = h_rel + 2.0 * t * state.speed
    mean_curv = np.sum(1.0 / state.radii, axis=1)
    f_min = float(monitor.min())
    h_over_f = float(np.max(mean_curv / monitor))

    centered = rebase(surface, steiner_point(surface))
    rho = float(centered.h.min())
    aspher = float(centered.h.max() / rho) if rho > 0 else math.inf

    if trace.times:
        prev_f, prev_hf = trace.F_min_series[-1], trace.H_over_F_max_series[-1]
        if f_min < prev_f - tol * (1.0 + abs(prev_f)):
            trace.monitor_violations += 1
            logger.warning(f"⚠️ 𝓕_min decrece en t={t:.6g}: {prev_f:.12g} -> {f_min:.12g}")
        if h_over_f > prev_hf + tol * (1.0 + abs(prev_hf)):
            trace.monitor_violations += 1
            logger.warning(f"⚠️ max H/𝓕 crece en t={t:.6g}: {prev_hf:.12g} -> {h_over_f:.12g}")

    trace.times.append(float(t))
    trace.F_min_series.append(f_min)
    trace.H_over_F_max_series.append(h_over_f)
    trace.Q_min_series.append(float(state.speed.min()))
    trace.Q_max_series.append(float(state.speed.max()))
    trace.volume_series.append(enclosed_volume(surface))
    trace.min_radius_series.append(float(state.radii.min()))
    trace.asphericity.append(aspher)
    trace.rho_series.append(rho)
    return rho


def run(surface: SupportSurface, cfg: FlowConfig,
        on_step: Optional[Callable[[float, SupportSurface], None]] = None) -> FlowTrace:
    """
    Avanza hasta t_end, extinción o alarma.

    Las alarmas (pérdida de convexidad, CFL) detienen la corrida, fijan
    stop_reason y conservan la traza parcial en trace.failure.
    """
    if surface.n != cfg.n:
        raise DomainError(f"superficie de dimensión {surface.n}, configuración n={cfg.n}")

    trace = FlowTrace(n=cfg.n, k=cfg.k, initial=surface)
    origin0 = surface.origin.copy()
    threshold = cfg.extinction_factor * surface.grid.spacing * float(np.max(np.abs(surface.h)))
    delta = 0.5 * float(surface.h.min())
    if delta > 0:
        trace.speed_bound = 2.0 * (cfg.n - cfg.k + 1) / (cfg.k * delta)

    pending = sorted(set(float(x) for x in cfg.snapshot_times if x <= cfg.t_end))
    log_system_event("run_start", {
        "n": cfg.n, "k": cfg.k, "scheme": cfg.scheme, "grid": surface.grid.kind,
        "nodes": surface.grid.size, "t_end": cfg.t_end,
    }, logger_name='flowcore')

    t = 0.0
    state = _evaluate(surface, cfg.k, t)
    rho = _record(trace, surface, state, t, origin0, cfg.monitor_tolerance)

    try:
        while True:
            if rho < threshold:
                trace.stop_reason = STOP_EXTINCT
                break
            if t >= cfg.t_end:
                trace.stop_reason = STOP_T_END
                break
            if trace.steps >= cfg.max_steps:
                trace.stop_reason = STOP_MAX_STEPS
                break

            dt = _stable_dt(surface, state, cfg) if cfg.adaptive else cfg.dt
            target = min([cfg.t_end] + pending)
            if t + dt >= target * (1.0 - 1e-12):
                dt = target - t
                t_next = target
            else:
                t_next = t + dt
            if not cfg.adaptive:
                _guard_displacement(surface, state, dt, cfg)

            surface = _advance(surface, state, dt, cfg)
            t = t_next
            trace.steps += 1

            if cfg.recenter_every and trace.steps % cfg.recenter_every == 0:
                moved = recenter(surface)
                trace.recenterings.append((t, [float(x) for x in moved.origin - surface.origin]))
                surface = moved

            state = _evaluate(surface, cfg.k, t)
            rho = _record(trace, surface, state, t, origin0, cfg.monitor_tolerance)

            while pending and pending[0] <= t * (1.0 + 1e-12):
                trace.snapshots[pending.pop(0)] = surface
            if on_step is not None:
                on_step(t, surface)
    except ConvexityLossError as e:
        trace.stop_reason = STOP_CONVEXITY
        trace.failure = e
        log_system_event("alarm", {"reason": STOP_CONVEXITY, "node": e.node, "t": t}, logger_name='flowcore')
    except CFLViolationError as e:
        trace.stop_reason = STOP_CFL
        trace.failure = e
        log_system_event("alarm", {"reason": STOP_CFL, "suggested_dt": e.suggested_dt, "t": t},
                         logger_name='flowcore')

    trace.final = surface
    log_system_event("run_stop", {
        "reason": trace.stop_reason, "t": f"{t:.6g}", "steps": trace.steps,
        "monitor_violations": trace.monitor_violations,
    }, logger_name='flowcore')
    return trace

# ========================================
# EXTINCIÓN Y COMPARACIÓN
# ========================================

def extinction_time_estimate(trace: FlowTrace) -> float:
    """
    Extrapola el tiempo de extinción.

    Ajusta V^{2/(n+1)} (lineal en t para la contracción esférica) con un
    polinomio cuadrático sobre el último 10% de las muestras (mínimo 5) y
    devuelve la primera raíz real posterior al último tiempo; si no existe,
    usa el ajuste lineal.
    """
    if trace.stop_reason != STOP_EXTINCT:
        raise ExtinctionUnavailableError(
            f"la corrida terminó con {trace.stop_reason!r}, no por extinción"
        )
    count = len(trace.times)
    window = max(5, int(math.ceil(EXTINCTION_FIT_FRACTION * count)))
    if count < 3:
        raise ExtinctionUnavailableError("muy pocas muestras para extrapolar")
    window = min(window, count)
    t = np.asarray(trace.times[-window:])
    y = np.asarray(trace.volume_series[-window:]) ** (2.0 / (trace.n + 1))
    t_last = t[-1]

    # centrado para condicionar el ajuste
    shift = t_last
    if window >= 5:
        coeffs = np.polyfit(t - shift, y, 2)
        roots = np.roots(coeffs)
        real = [r.real + shift for r in roots if abs(r.imag) < 1e-12 and r.real >= -1e-12 * max(1.0, t_last)]
        if real:
            estimate = float(min(real))
            logger.info(f"✅ Extinción estimada (cuadrática): T≈{estimate:.8g}")
            return estimate
    slope, intercept = np.polyfit(t - shift, y, 1)
    if slope >= 0:
        raise ExtinctionUnavailableError("la tendencia de volumen no decrece")
    estimate = float(shift - intercept / slope)
    logger.info(f"✅ Extinción estimada (lineal): T≈{estimate:.8g}")
    return estimate


class ComparisonReport(BaseModel):
    """Inclusión A_t ⊇ B_t comparada en cada paso común hasta la extinción del interior."""

    steps: int = Field(description="Pasos comparados después del dato inicial", ge=1)
    t_final: float
    stop_reason: str
    violations: int
    max_excess: float = Field(description="max (h_B − h_A) sobre nodos y pasos; <= 0 si se preserva")
    first_violation: Optional[float] = None


def _inclusion_excess(outer: SupportSurface, inner: SupportSurface) -> float:
    inner = rebase(inner, outer.origin)
    return float(np.max(inner.h - outer.h))


def _inradius(surface: SupportSurface) -> float:
    return float(rebase(surface, steiner_point(surface)).h.min())


def comparison_check(outer: SupportSurface, inner: SupportSurface, cfg: FlowConfig) -> ComparisonReport:
    """
    Evoluciona ambos cuerpos con el mismo dt y verifica encloses(A_t, B_t) en cada paso.

    El dt común es el menor de los dt estables de los dos cuerpos. La comparación
    termina cuando el interior cruza el umbral de extinción de `run`, en cfg.t_end
    o con una alarma de cualquiera de los dos (queda en stop_reason).

    Raises:
        DomainError: datos no anidados, o interior ya por debajo del umbral de extinción
    """
    if outer.n != cfg.n or inner.n != cfg.n:
        raise DomainError(f"superficies de dimensión {outer.n}/{inner.n}, configuración n={cfg.n}")
    if not encloses(outer, inner):
        raise DomainError("los datos iniciales no están anidados")
    threshold = cfg.extinction_factor * inner.grid.spacing * float(np.max(np.abs(inner.h)))
    if _inradius(inner) < threshold:
        raise DomainError("el cuerpo interior ya está bajo el umbral de extinción: no hay pasos que comparar")

    t, steps, violations = 0.0, 0, 0
    excess = _inclusion_excess(outer, inner)
    first_violation = None
    stop_reason = STOP_T_END
    try:
        state_a, state_b = _evaluate(outer, cfg.k, t), _evaluate(inner, cfg.k, t)
        while True:
            if steps and _inradius(inner) < threshold:
                stop_reason = STOP_EXTINCT
                break
            if t >= cfg.t_end:
                stop_reason = STOP_T_END
                break
            if steps >= cfg.max_steps:
                stop_reason = STOP_MAX_STEPS
                break

            if cfg.adaptive:
                dt = min(_stable_dt(outer, state_a, cfg), _stable_dt(inner, state_b, cfg))
            else:
                dt = cfg.dt
                _guard_displacement(outer, state_a, dt, cfg)
                _guard_displacement(inner, state_b, dt, cfg)
            if t + dt >= cfg.t_end * (1.0 - 1e-12):
                dt, t_next = cfg.t_end - t, cfg.t_end
            else:
                t_next = t + dt

            outer = _advance(outer, state_a, dt, cfg)
            inner = _advance(inner, state_b, dt, cfg)
            t = t_next
            steps += 1
            state_a, state_b = _evaluate(outer, cfg.k, t), _evaluate(inner, cfg.k, t)

            gap = _inclusion_excess(outer, inner)
            excess = max(excess, gap)
            if not encloses(outer, inner):
                violations += 1
                if first_violation is None:
                    first_violation = t
                    logger.warning(f"⚠️ Inclusión violada en t={t:.6g} (exceso {gap:.3e})")
    except ConvexityLossError:
        stop_reason = STOP_CONVEXITY
    except CFLViolationError:
        stop_reason = STOP_CFL

    if steps == 0:
        raise DomainError(f"ningún paso comparado (parada {stop_reason})")
    return ComparisonReport(steps=steps, t_final=t, stop_reason=stop_reason, violations=violations,
                            max_excess=excess, first_violation=first_violation)
