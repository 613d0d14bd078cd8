# flows/viscosity.py
"""
Construcciones de existencia y unicidad hechas ejecutables:

- familias ε de aproximaciones interiores estrictamente convexas,
- límite de la familia evolucionada (criterio de Cauchy),
- comparación con la dilatación parabólica (1+δ)·F(·, t/(1+δ)²),
- sonda de positividad de la velocidad en la región que ya se movió.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from pydantic import BaseModel, Field

import config
from flows.flowcore import (
    STOP_CONVEXITY, FlowConfig, FlowTrace, _evaluate,
    extinction_time_estimate, run
)
from geometry.convexgeom import (
    SupportSurface, boundary_points, dilate, distance_to_boundary, encloses,
    hausdorff_distance, principal_radii, rebase
)
from geometry.errors import ApproximationError, DomainError, ExtinctionUnavailableError

try:
    from utils.logger import get_logger
    logger = get_logger('viscosity')
except ImportError:
    import logging
    logger = logging.getLogger('viscosity')

HEAT_SUBSTEPS = 8

# ========================================
# FAMILIA DE APROXIMACIONES
# ========================================

@dataclass
class ApproximationFamily:
    """Miembros estrictamente convexos, anidados y crecientes hacia el padre cuando ε → 0."""

    parent: SupportSurface
    epsilons: List[float]
    members: List[SupportSurface]
    shifts: List[float] = field(default_factory=list)
    fallbacks: List[bool] = field(default_factory=list)

    def min_radii(self) -> List[float]:
        return [float(principal_radii(m).min()) for m in self.members]

    def hausdorff(self) -> List[float]:
        return [hausdorff_distance(self.parent, m) for m in self.members]


def heat_smooth(surface: SupportSurface, tau: float, substeps: int = HEAT_SUBSTEPS) -> np.ndarray:
    """
    Flujo de calor esférico h_t = Δh durante τ (Euler implícito, `substeps` pasos).

    Es una convolución invariante por rotaciones, por lo que conserva la convexidad
    y deja fijas las constantes.
    """
    if tau <= 0:
        return surface.h.copy()
    grid = surface.grid
    system = (sp.identity(grid.size, format="csc") - (tau / substeps) * grid.laplacian_matrix()).tocsc()
    solver = splu(system)
    h = surface.h.copy()
    for _ in range(substeps):
        h = solver.solve(h)
    return h


def approximate(parent: SupportSurface, epsilons: Sequence[float]) -> ApproximationFamily:
    """
    member_ε = h̃_ε − c·ε, con h̃_ε el suavizado de calor a τ = ε²/8 y c el menor
    valor >= 1 que deja el miembro dentro del padre y del miembro de ε menor.

    Si el radio mínimo queda por debajo de ε/2 se usa σ·h̃_ε + ε/2.

    Raises:
        ApproximationError: padre no convexo u origen no interior
    """
    eps = sorted({float(e) for e in epsilons}, reverse=True)
    if not eps or eps[-1] <= 0:
        raise DomainError("los ε deben ser positivos")
    parent_radii = principal_radii(parent)
    if parent_radii.min() < -1e-12:
        node = int(np.argmin(parent_radii.min(axis=1)))
        raise ApproximationError(f"padre no convexo: radio {parent_radii.min():.3e} en el nodo {node}")
    if parent.h.min() <= 0:
        raise ApproximationError("el origen del padre no es interior")

    logger.info(f"🔧 Construyendo familia ε={eps}")
    by_eps = {}
    previous: Optional[np.ndarray] = None
    for e in reversed(eps):
        smooth = heat_smooth(parent, e * e / 8.0)
        upper = parent.h - e
        if previous is not None:
            upper = np.minimum(upper, previous)
        c = max(1.0, float(np.max(smooth - upper)) / e)
        member = parent.with_h(smooth - c * e)
        fallback = False
        if principal_radii(member).min() < e / 2.0:
            if smooth.min() <= 0:
                raise ApproximationError(f"ε={e}: suavizado sin origen interior")
            sigma = float(np.min((upper - e / 2.0) / smooth))
            if sigma <= 0:
                raise ApproximationError(f"ε={e} demasiado grande para el padre")
            member = parent.with_h(sigma * smooth + e / 2.0)
            c = math.nan
            fallback = True
            logger.warning(f"⚠️ ε={e}: radio mínimo < ε/2, se usa σ·h̃ + ε/2 (σ={sigma:.6g})")
        by_eps[e] = (member, c, fallback)
        previous = member.h

    family = ApproximationFamily(
        parent=parent,
        epsilons=eps,
        members=[by_eps[e][0] for e in eps],
        shifts=[by_eps[e][1] for e in eps],
        fallbacks=[by_eps[e][2] for e in eps],
    )
    logger.info(f"✅ Familia lista: radios mínimos {[f'{r:.4g}' for r in family.min_radii()]}")
    return family

# ========================================
# LÍMITE DE LA FAMILIA EVOLUCIONADA
# ========================================

class ProbeConvergence(BaseModel):
    t: float
    differences: List[float] = Field(description="sup|h_{ε_i} − h_{ε_{i+1}}| en orden de ε decreciente")
    ratios: List[float]
    decay_slope: Optional[float] = Field(default=None, description="pendiente log-log de las diferencias vs ε")
    converged: bool
    nesting_violations: int


class FamilyFlowReport(BaseModel):
    epsilons: List[float]
    probes: List[ProbeConvergence]
    converged: bool
    failing_epsilon: Optional[float] = None
    failure: Optional[str] = None
    extinction_times: Optional[List[float]] = None
    outer_sphere_time: Optional[float] = None
    extinction_monotone: Optional[bool] = None


def _run_members(members: List[SupportSurface], cfg: FlowConfig) -> List[FlowTrace]:
    workers = max(1, min(config.THREADS, len(members)))
    if workers == 1:
        return [run(m, cfg) for m in members]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda m: run(m, cfg), members))


def outer_sphere_extinction_time(surface: SupportSurface, k: int) -> float:
    """T_R de la esfera de radio max h alrededor del origen, que encierra al cuerpo."""
    n = surface.n
    return k * float(surface.h.max()) ** 2 / (2.0 * (n - k + 1))


def family_flow_limit(fam: ApproximationFamily, cfg: FlowConfig, t_probe: Sequence[float],
                      with_extinction: bool = False) -> FamilyFlowReport:
    """
    Evoluciona cada miembro hasta cada tiempo de sonda y mide las diferencias
    sucesivas; converge si todas las razones son <= CAUCHY_RATIO.
    """
    probes = sorted(float(t) for t in t_probe)
    if not probes or probes[0] <= 0:
        raise DomainError("los tiempos de sonda deben ser positivos")
    probe_cfg = cfg.model_copy(update={"snapshot_times": probes, "t_end": probes[-1]})
    logger.info(f"🔧 Evolucionando {len(fam.members)} miembros hasta t={probes[-1]} (hilos={config.THREADS})")
    traces = _run_members(fam.members, probe_cfg)

    failing, failure = None, None
    for e, trace in zip(fam.epsilons, traces):
        if trace.stop_reason == STOP_CONVEXITY:
            failing, failure = e, str(trace.failure)
            logger.error(f"❌ Miembro ε={e} perdió convexidad: {trace.failure}")
            break

    reports: List[ProbeConvergence] = []
    for t in probes:
        try:
            snaps = [trace.snapshot_at(t) for trace in traces]
        except KeyError:
            continue
        diffs, nesting = [], 0
        for coarse, fine in zip(snaps[:-1], snaps[1:]):
            diffs.append(hausdorff_distance(fine, coarse))
            if not encloses(fine, coarse, tol=1e-12):
                nesting += 1
        ratios = [b / a if a > 0 else 0.0 for a, b in zip(diffs[:-1], diffs[1:])]
        slope = None
        if len(diffs) >= 2 and all(d > 0 for d in diffs):
            slope = float(np.polyfit(np.log(fam.epsilons[:-1]), np.log(diffs), 1)[0])
        reports.append(ProbeConvergence(
            t=t, differences=diffs, ratios=ratios, decay_slope=slope,
            converged=bool(ratios) and all(r <= config.CAUCHY_RATIO for r in ratios),
            nesting_violations=nesting,
        ))

    report = FamilyFlowReport(
        epsilons=list(fam.epsilons),
        probes=reports,
        converged=failing is None and len(reports) == len(probes) and all(p.converged for p in reports),
        failing_epsilon=failing,
        failure=failure,
    )

    if with_extinction:
        t_outer = outer_sphere_extinction_time(fam.parent, cfg.k)
        ext_cfg = cfg.model_copy(update={"snapshot_times": [], "t_end": 2.0 * t_outer})
        times = []
        for e, trace in zip(fam.epsilons, _run_members(fam.members, ext_cfg)):
            try:
                times.append(extinction_time_estimate(trace))
            except ExtinctionUnavailableError as exc:
                logger.warning(f"⚠️ ε={e}: sin tiempo de extinción ({exc})")
                times.append(math.nan)
        finite = [x for x in times if math.isfinite(x)]
        report.extinction_times = times
        report.outer_sphere_time = t_outer
        report.extinction_monotone = (
            len(finite) == len(times)
            and all(b >= a * (1.0 - 1e-3) for a, b in zip(times[:-1], times[1:]))
            and all(x <= t_outer * (1.0 + 1e-2) for x in times)
        )

    status = "✅" if report.converged else "⚠️"
    logger.info(f"{status} Límite de la familia: converged={report.converged}")
    return report

# ========================================
# UNICIDAD POR DILATACIÓN
# ========================================

class DilationReport(BaseModel):
    delta: float
    times: List[float]
    scaling_deviation: List[float] = Field(description="sup|h_δ(t(1+δ)²) − (1+δ)h(t)|")
    closeness: List[float] = Field(description="sup|h_δ(t) − h(t)|")
    constant: float = Field(description="max closeness / δ")


def dilation_uniqueness_check(surface: SupportSurface, delta: float, cfg: FlowConfig,
                              times: Sequence[float]) -> DilationReport:
    """Compara la corrida dilatada con la ley de escala parabólica y mide la cercanía C·δ."""
    if delta <= 0:
        raise DomainError("δ debe ser positivo")
    scale = 1.0 + delta
    base_times = sorted(float(t) for t in times)
    scaled_times = [t * scale ** 2 for t in base_times]
    all_times = sorted(set(base_times + scaled_times))
    probe_cfg = cfg.model_copy(update={"snapshot_times": all_times, "t_end": all_times[-1]})

    logger.info(f"🔧 Dilatación δ={delta}: {len(base_times)} tiempos")
    base, dilated = _run_members([surface, dilate(surface, scale)], probe_cfg)

    common, scaling, closeness = [], [], []
    for t, ts in zip(base_times, scaled_times):
        try:
            h_t = base.snapshot_at(t)
            d_ts = dilated.snapshot_at(ts)
            d_t = dilated.snapshot_at(t)
        except KeyError:
            continue
        common.append(t)
        d_ts_rel = rebase(d_ts, scale * h_t.origin)
        scaling.append(float(np.max(np.abs(d_ts_rel.h - scale * h_t.h))))
        closeness.append(hausdorff_distance(h_t, d_t))

    if not common:
        raise ExtinctionUnavailableError("ningún tiempo de muestreo alcanzado antes de la parada")
    constant = max(closeness) / delta
    logger.info(f"✅ Dilatación δ={delta}: C={constant:.6g}, escala max={max(scaling):.3e}")
    return DilationReport(delta=delta, times=common, scaling_deviation=scaling,
                          closeness=closeness, constant=constant)


def dilation_sweep(surface: SupportSurface, deltas: Sequence[float], cfg: FlowConfig,
                   times: Sequence[float]) -> dict:
    """Barrido δ → 0: pendiente log-log de max closeness frente a δ (esperada ≈ 1)."""
    reports = [dilation_uniqueness_check(surface, d, cfg, times) for d in deltas]
    dev = np.array([max(r.closeness) for r in reports])
    slope = float(np.polyfit(np.log(np.asarray(deltas, dtype=float)), np.log(dev), 1)[0])
    constants = [r.constant for r in reports]
    return {
        "deltas": list(deltas),
        "deviations": dev.tolist(),
        "constants": constants,
        "slope": slope,
        "constant_spread": (max(constants) - min(constants)) / max(constants),
    }

# ========================================
# SONDA DE POSITIVIDAD DE LA VELOCIDAD
# ========================================

class SpeedProbeReport(BaseModel):
    t0: float
    distance: float
    empty: bool
    nodes: int = 0
    min_speed: Optional[float] = None
    min_margin: Optional[float] = Field(default=None, description="min (Q_k − dist/(4t₀))")
    satisfied: Optional[bool] = None


def speed_positivity_probe(trace: FlowTrace, t0: float, distance: float,
                           tolerance: float = 1e-6) -> SpeedProbeReport:
    """
    Sobre los nodos cuyo punto se alejó al menos `distance` de Σ₀ comprueba
    Q_k >= dist/(4t₀) − tolerancia.

    La cota literal usa 𝓕_min(0)/(4t₀), con 𝓕 el soporte medido desde un punto
    interior. Si x₀ está a distancia dist de Σ₀, la bola de radio dist centrada
    en x₀ queda dentro del cuerpo inicial y el soporte respecto de x₀ es
    >= dist en toda dirección, así que 𝓕_min(0) >= dist. Por eso cada nodo se
    compara contra su propia distancia recorrida, que es la versión más fuerte
    que puede comprobarse sin conocer x₀.

    Args:
        trace: traza con la superficie inicial conservada
        t0: tiempo de la comprobación (> 0)
        distance: distancia mínima recorrida para incluir un nodo
        tolerance: holgura absoluta sobre el margen

    Raises:
        DomainError: t₀ o distancia no positivos, o traza sin superficie inicial
    """
    if t0 <= 0 or distance <= 0:
        raise DomainError("t₀ y la distancia deben ser positivos")
    if trace.initial is None:
        raise DomainError("la traza no conserva la superficie inicial")
    snap = trace.snapshot_at(t0)
    points = boundary_points(snap)
    moved = distance_to_boundary(trace.initial, points)
    mask = moved >= distance
    if not np.any(mask):
        logger.info(f"⚠️ Sonda vacía en t₀={t0}: ningún punto se movió {distance}")
        return SpeedProbeReport(t0=t0, distance=distance, empty=True)

    speed = _evaluate(snap, trace.k, t0).speed[mask]
    margin = speed - moved[mask] / (4.0 * t0)
    report = SpeedProbeReport(
        t0=t0, distance=distance, empty=False, nodes=int(mask.sum()),
        min_speed=float(speed.min()), min_margin=float(margin.min()),
        satisfied=bool(margin.min() >= -tolerance),
    )
    logger.info(f"✅ Sonda t₀={t0}: {report.nodes} nodos, min Q_k={report.min_speed:.6g}")
    return report
