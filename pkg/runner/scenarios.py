# runner/scenarios.py
"""
Ejecución de los siete escenarios. Cada ejecutor escribe sus artefactos con
un ArtifactWriter y devuelve un ScenarioOutcome; las alarmas de runtime no
se propagan: quedan en `alarm` para que el CLI salga con código 3.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from audit.linearization import (
    check_a11_scaling, check_aii_lower_bound, check_speed_derivative_bounds,
    degenerate_structure_check, linearized_coefficients,
)
from flatside.charts import f_grid_values, geometric_z_grid, model_jet
from flatside.holder import weighted_holder_norms
from flatside.pressure import (
    STOP_DEGENERATE, STOP_STAR_ALARM, lens_profile, predicted_interface_slope,
    run_flat_side, verify_interface_law,
)
from flows.flowcore import (
    ALARM_REASONS, STOP_EXTINCT, TRACE_COLUMNS, comparison_check, extinction_time_estimate,
    run, sphere_extinction_time,
)
from flows.viscosity import approximate, dilation_sweep, dilation_uniqueness_check, family_flow_limit
from geometry.convexgeom import ellipsoid, encloses, lens, sphere, translate
from geometry.errors import QkLabError, StarConditionError
from geometry.spheregrid import sphere_area
from geometry.symfun import qk_gradient_batch
from runner.persistence import ArtifactWriter

try:
    from utils.logger import get_logger
    logger = get_logger('scenarios')
except ImportError:
    import logging
    logger = logging.getLogger('scenarios')


@dataclass
class ScenarioOutcome:
    stop_reason: str
    alarm: Optional[str] = None
    report: Dict = field(default_factory=dict)


# ========================================
# FLUJO: ESFERA Y ELIPSOIDE
# ========================================

def sphere_law_error(trace, radius: float) -> float:
    """max_t |R(t)² − (R₀² − 2(n−k+1)t/k)| con R(t) leído del volumen."""
    n, k = trace.n, trace.k
    ball = sphere_area(n) / (n + 1)
    worst = 0.0
    for t, volume in zip(trace.times, trace.volume_series):
        r2 = (max(volume, 0.0) / ball) ** (2.0 / (n + 1))
        law = radius ** 2 - 2.0 * (n - k + 1) * t / k
        worst = max(worst, abs(r2 - law))
    return worst


def run_shrink_sphere(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    exact = sphere_extinction_time(p.n, p.k, p.radius)
    cfg = p.flow_config(p.t_end or 1.05 * exact)
    surface = sphere(cfg.make_grid(), p.radius)
    trace = run(surface, cfg)
    writer.write_csv("trace.csv", TRACE_COLUMNS, trace.rows())

    report = {"summary": trace.summary(), "exact_extinction_time": exact,
              "sphere_law_error": sphere_law_error(trace, p.radius)}
    if trace.stop_reason == STOP_EXTINCT:
        estimate = extinction_time_estimate(trace)
        report["extinction_time_estimate"] = estimate
        report["extinction_relative_error"] = abs(estimate - exact) / exact
    writer.write_json("report.json", report)
    alarm = trace.stop_reason if trace.stop_reason in ALARM_REASONS else None
    return ScenarioOutcome(trace.stop_reason, alarm, report)


def nested_pairs(grid, count: int, seed: int):
    """Pares (A, B) de elipsoides con B ⊆ A generados con semilla fija."""
    rng = np.random.default_rng(seed)
    n = grid.n
    pairs = []
    while len(pairs) < count:
        outer_axes = rng.uniform(0.8, 1.6, size=2)
        inner_axes = outer_axes * rng.uniform(0.4, 0.8, size=2)
        axes_a = [outer_axes[0]] * n + [outer_axes[1]]
        axes_b = [inner_axes[0]] * n + [inner_axes[1]]
        offset = np.zeros(n + 1)
        offset[-1] = rng.uniform(-0.1, 0.1)
        a = ellipsoid(grid, axes_a)
        b = translate(ellipsoid(grid, axes_b), offset)
        if encloses(a, b):
            pairs.append((a, b))
    return pairs


def run_shrink_ellipsoid(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    axes = np.asarray(p.semi_axes)
    # cota superior: la esfera circunscrita se extingue después
    t_end = p.t_end or 1.05 * sphere_extinction_time(p.n, p.k, float(axes.max()))
    cfg = p.flow_config(t_end)
    grid = cfg.make_grid()
    trace = run(ellipsoid(grid, p.semi_axes), cfg)
    writer.write_csv("trace.csv", TRACE_COLUMNS, trace.rows())

    report = {"summary": trace.summary()}
    if trace.stop_reason == STOP_EXTINCT:
        report["extinction_time_estimate"] = extinction_time_estimate(trace)

    alarm = trace.stop_reason if trace.stop_reason in ALARM_REASONS else None
    if p.comparison_pairs:
        reports = [comparison_check(outer, inner, cfg)
                   for outer, inner in nested_pairs(grid, p.comparison_pairs, scenario.seed)]
        pair_alarms = [r.stop_reason for r in reports if r.stop_reason in ALARM_REASONS]
        report["comparison"] = {
            "pairs": len(reports),
            "steps": sum(r.steps for r in reports),
            "extinct": sum(r.stop_reason == STOP_EXTINCT for r in reports),
            "alarms": len(pair_alarms),
            "violations": sum(r.violations for r in reports),
            "max_excess": max(r.max_excess for r in reports),
        }
        alarm = alarm or (pair_alarms[0] if pair_alarms else None)
    writer.write_json("report.json", report)
    return ScenarioOutcome(trace.stop_reason, alarm, report)

# ========================================
# VISCOSIDAD Y DILATACIÓN
# ========================================

VISCOSITY_COLUMNS = ("t", "epsilon_coarse", "epsilon_fine", "difference", "ratio")


def run_viscosity(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    cfg = p.flow_config(max(p.probe_times))
    parent = lens(cfg.make_grid(), p.radius, p.flat_radius)
    family = approximate(parent, p.epsilons)
    result = family_flow_limit(family, cfg, p.probe_times, with_extinction=p.with_extinction)

    rows = []
    for probe in result.probes:
        for i, diff in enumerate(probe.differences):
            ratio = probe.ratios[i - 1] if i >= 1 else math.nan
            rows.append((probe.t, result.epsilons[i], result.epsilons[i + 1], diff, ratio))
    writer.write_csv("sweep.csv", VISCOSITY_COLUMNS, rows)
    report = {"family": result.model_dump(), "shifts": family.shifts, "fallbacks": family.fallbacks}
    writer.write_json("report.json", report)
    alarm = "CONVEXITY_LOSS" if result.failure else None
    return ScenarioOutcome(alarm or "T_END", alarm, report)


DILATION_COLUMNS = ("delta", "deviation", "constant")


def run_dilation(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    cfg = p.flow_config(max(p.probe_times) * (1.0 + max(p.deltas)) ** 2)
    surface = ellipsoid(cfg.make_grid(), p.semi_axes)
    sweep = dilation_sweep(surface, p.deltas, cfg, p.probe_times)
    writer.write_csv("sweep.csv", DILATION_COLUMNS,
                     zip(sweep["deltas"], sweep["deviations"], sweep["constants"]))

    refinement = []
    for resolution in p.refinements:
        fine_cfg = cfg.model_copy(update={"resolution": resolution})
        check = dilation_uniqueness_check(ellipsoid(fine_cfg.make_grid(), p.semi_axes),
                                          p.deltas[0], fine_cfg, p.probe_times)
        refinement.append({"resolution": resolution, "max_scaling_deviation": max(check.scaling_deviation)})
    report = {"sweep": sweep, "refinement": refinement}
    writer.write_json("report.json", report)
    return ScenarioOutcome("T_END", None, report)

# ========================================
# LADO PLANO
# ========================================

RHO_COLUMNS = ("t", "rho", "rho2", "lambda_star")


def run_flat_side_lens(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    profile = lens_profile(p.n, p.k, p.radius, p.flat_radius, nodes=p.nodes, reach=p.reach)
    # ρ² llega a la mitad de ρ₀²
    t_end = p.t_end or 0.5 * p.flat_radius ** 2 / abs(predicted_interface_slope(p.n, p.k))
    try:
        result = run_flat_side(profile, t_end, lam=p.lam, dt=p.dt, cfl=p.cfl, max_steps=p.max_steps)
    except StarConditionError as e:
        report = {"stop_reason": STOP_STAR_ALARM, "failure": str(e),
                  "star": e.report.model_dump() if e.report is not None else None}
        writer.write_json("report.json", report)
        return ScenarioOutcome(STOP_STAR_ALARM, STOP_STAR_ALARM, report)

    traj = result.trajectory
    writer.write_csv("rho.csv", RHO_COLUMNS,
                     ((t, r, r * r, s) for t, r, s in zip(traj.times, traj.rho_series, result.star_series)))
    report = {
        "stop_reason": result.stop_reason,
        "steps": result.steps,
        "failure": str(result.failure) if result.failure else None,
        "lambda": p.lam,
        "min_lambda_star": min(result.star_series),
        "star_persistence_time": result.star_persistence_time,
        "fit_window": p.fit_window,
    }
    try:
        report["interface_law"] = verify_interface_law(traj, p.n, p.k, window=p.fit_window).model_dump()
    except QkLabError as e:
        report["interface_law"] = None
        report["interface_law_error"] = str(e)
    writer.write_json("report.json", report)
    alarm = result.stop_reason if result.stop_reason in (STOP_STAR_ALARM, STOP_DEGENERATE) else None
    return ScenarioOutcome(result.stop_reason, alarm, report)

# ========================================
# AUDITORÍA Y NORMAS
# ========================================

AUDIT_COLUMNS = ("z", "a11_minors", "a11_fd", "min_aii", "dQ_dlambda1", "agreement")


def run_linearization_audit(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    z = geometric_z_grid(p.z_max, p.ratio, p.z_min)
    xbar = np.zeros(p.n - 1)
    jets = [model_jet(zj, xbar, 0.0, p.a, p.c) for zj in z]

    rows, lambdas, worst = [], [], 0.0
    for jet in jets:
        minors = linearized_coefficients(jet, p.k, "minors")
        fd = linearized_coefficients(jet, p.k, "finite-difference")
        agreement = float(np.max(np.abs(minors.a - fd.a)) / np.max(np.abs(minors.a)))
        worst = max(worst, agreement)
        lambdas.append(minors.eigenvalues)
        rows.append((jet.z, minors.a[0, 0], fd.a[0, 0], float(np.min(np.diag(minors.a)[1:])), agreement))
    speed = check_speed_derivative_bounds(lambdas, z, p.k)
    _, grad = qk_gradient_batch(np.asarray(lambdas), p.k)
    rows = [(zj, a11, a11_fd, aii, float(g), agr) for (zj, a11, a11_fd, aii, agr), g in zip(rows, grad[:, 0])]
    writer.write_csv("sweep.csv", AUDIT_COLUMNS, rows)

    report = {
        "a11": check_a11_scaling(jets, p.k).model_dump(),
        "aii": check_aii_lower_bound(jets, p.k).model_dump(),
        "speed_derivatives": speed.model_dump(),
        "structure": degenerate_structure_check(jets, p.k).model_dump(),
        "dual_method_agreement": worst,
    }
    writer.write_json("report.json", report)
    return ScenarioOutcome("T_END", None, report)


HOLDER_COLUMNS = ("z", "f")


def run_holder_norms(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    p = scenario.params
    x = np.linspace(-p.x_extent, p.x_extent, p.x_points)
    if p.function == "sqrt_z":
        axes = [x]
        z = geometric_z_grid(p.z_max, p.ratio, p.z_min)
        values = np.repeat(np.sqrt(z)[:, None], x.size, axis=1)
    else:
        axes = [x] * (p.n - 1)
        profile = lens_profile(p.n, p.k, p.radius, p.flat_radius)
        z = geometric_z_grid(min(p.z_max, 0.1 * float(profile.u.max())), p.ratio, p.z_min)
        values = f_grid_values(profile, z, axes)
    norms = weighted_holder_norms(z, axes, values, p.alpha, seed=scenario.seed)
    center = (slice(None),) + (x.size // 2,) * len(axes)
    writer.write_csv("sweep.csv", HOLDER_COLUMNS, zip(z, values[center]))
    report = {"function": p.function, "norms": norms.model_dump()}
    writer.write_json("report.json", report)
    return ScenarioOutcome("T_END", None, report)


EXECUTORS: Dict[str, Callable] = {
    "shrink_sphere": run_shrink_sphere,
    "shrink_ellipsoid": run_shrink_ellipsoid,
    "viscosity_convergence": run_viscosity,
    "dilation_uniqueness": run_dilation,
    "flat_side_lens": run_flat_side_lens,
    "linearization_audit": run_linearization_audit,
    "holder_norms": run_holder_norms,
}


def execute(scenario, writer: ArtifactWriter) -> ScenarioOutcome:
    logger.info(f"🔧 Escenario {scenario.name} (seed={scenario.seed})")
    outcome = EXECUTORS[scenario.name](scenario, writer)
    if outcome.alarm:
        logger.error(f"❌ Escenario {scenario.name} terminó con alarma {outcome.alarm}")
    else:
        logger.info(f"✅ Escenario {scenario.name}: {outcome.stop_reason}")
    return outcome
