# runner/verification.py
"""
Re-chequeo de una corrida a partir de sus artefactos en disco: integridad de
hashes y las propiedades que el escenario afirma, recalculadas desde los CSV.
"""

import math
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
from pydantic import BaseModel

from config import ASYMPTOTIC_Z_MAX, CAUCHY_RATIO
from flatside.pressure import predicted_interface_slope
from geometry.spheregrid import sphere_area
from runner.persistence import RunManifest, check_hashes, read_columns, read_json, read_manifest

try:
    from utils.logger import get_logger
    logger = get_logger('verification')
except ImportError:
    import logging
    logger = logging.getLogger('verification')

SPHERE_LAW_TOL = 1e-3
EXTINCTION_REL_TOL = 0.02
DILATION_SPREAD_TOL = 0.2
INTERFACE_REL_TOL = 0.05
A11_EXPONENT = (2.0, 0.1)
LAMBDA1_SLOPE = (1.0, 0.05)
DUAL_METHOD_TOL = 1e-5


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    integrity: bool = False


class VerificationTable(BaseModel):
    scenario: str
    checks: List[CheckResult]

    @property
    def corrupt(self) -> bool:
        return any(c.integrity and not c.passed for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        width = max(len(c.name) for c in self.checks) if self.checks else 10
        lines = [f"{'check'.ljust(width)}  result  detail", f"{'-' * width}  ------  ------"]
        for c in self.checks:
            lines.append(f"{c.name.ljust(width)}  {'PASS' if c.passed else 'FAIL':6}  {c.detail}")
        return "\n".join(lines)

# ========================================
# CHEQUEOS COMUNES
# ========================================

def _monotone(values: List[float], tol: float, increasing: bool) -> int:
    """Cuenta pasos que violan la monotonía más allá de tol·(1 + |anterior|)."""
    bad = 0
    for prev, cur in zip(values[:-1], values[1:]):
        if not (math.isfinite(prev) and math.isfinite(cur)):
            continue
        drift = (prev - cur) if increasing else (cur - prev)
        if drift > tol * (1.0 + abs(prev)):
            bad += 1
    return bad


def _trace_checks(out: Path, manifest: RunManifest) -> List[CheckResult]:
    params = manifest.scenario.get("params", {})
    tol = float(params.get("monitor_tolerance", 1e-6))
    cols = read_columns(out / "trace.csv")
    checks = []
    f_bad = _monotone(cols["F_min"], tol, increasing=True)
    checks.append(CheckResult(name="F_min nondecreasing", passed=f_bad == 0, detail=f"{f_bad} violations"))
    h_bad = _monotone(cols["maxH_over_F"], tol, increasing=False)
    checks.append(CheckResult(name="max H/F nonincreasing", passed=h_bad == 0, detail=f"{h_bad} violations"))
    v_bad = _monotone(cols["volume"], tol, increasing=False)
    checks.append(CheckResult(name="volume nonincreasing", passed=v_bad == 0, detail=f"{v_bad} violations"))
    return checks

# ========================================
# POR ESCENARIO
# ========================================

def _verify_sphere(out: Path, manifest: RunManifest) -> List[CheckResult]:
    checks = _trace_checks(out, manifest)
    params = manifest.scenario["params"]
    n, k, radius = params["n"], params["k"], params["radius"]
    cols = read_columns(out / "trace.csv")
    ball = sphere_area(n) / (n + 1)
    worst = max(
        abs((max(v, 0.0) / ball) ** (2.0 / (n + 1)) - (radius ** 2 - 2.0 * (n - k + 1) * t / k))
        for t, v in zip(cols["t"], cols["volume"])
    )
    checks.append(CheckResult(name="sphere law", passed=worst <= SPHERE_LAW_TOL, detail=f"max error {worst:.3e}"))
    report = read_json(out / "report.json")
    error = report.get("extinction_relative_error")
    checks.append(CheckResult(
        name="extinction time", passed=error is not None and error <= EXTINCTION_REL_TOL,
        detail="unavailable" if error is None else f"relative error {error:.3e}",
    ))
    return checks


def _verify_ellipsoid(out: Path, manifest: RunManifest) -> List[CheckResult]:
    checks = _trace_checks(out, manifest)
    comparison = read_json(out / "report.json").get("comparison")
    if comparison:
        compared = comparison["pairs"] > 0 and comparison["extinct"] == comparison["pairs"]
        checks.append(CheckResult(
            name="comparison principle", passed=compared and comparison["violations"] == 0,
            detail=(f"{comparison['violations']} violations in {comparison['pairs']} pairs, "
                    f"{comparison['extinct']} compared up to inner extinction ({comparison['steps']} steps)"),
        ))
    return checks


def _verify_viscosity(out: Path, manifest: RunManifest) -> List[CheckResult]:
    cols = read_columns(out / "sweep.csv")
    ratios = [r for r in cols["ratio"] if math.isfinite(r)]
    worst = max(ratios) if ratios else math.nan
    report = read_json(out / "report.json")["family"]
    nesting = sum(p["nesting_violations"] for p in report["probes"])
    return [
        CheckResult(name="Cauchy ratios", passed=bool(ratios) and worst <= CAUCHY_RATIO,
                    detail=f"max ratio {worst:.4g}"),
        CheckResult(name="family nesting", passed=nesting == 0, detail=f"{nesting} violations"),
        CheckResult(name="members convex", passed=report["failure"] is None, detail=str(report["failure"] or "")),
    ]


def _verify_dilation(out: Path, manifest: RunManifest) -> List[CheckResult]:
    constants = read_columns(out / "sweep.csv")["constant"]
    spread = (max(constants) - min(constants)) / max(constants)
    checks = [CheckResult(name="dilation constant spread", passed=spread <= DILATION_SPREAD_TOL,
                          detail=f"spread {spread:.3%}")]
    refinement = read_json(out / "report.json").get("refinement") or []
    if len(refinement) >= 2:
        devs = [r["max_scaling_deviation"] for r in sorted(refinement, key=lambda r: r["resolution"])]
        checks.append(CheckResult(name="deviation under refinement", passed=devs[-1] < devs[0],
                                  detail=" -> ".join(f"{d:.3e}" for d in devs)))
    return checks


def _verify_lens(out: Path, manifest: RunManifest) -> List[CheckResult]:
    params = manifest.scenario["params"]
    n, k = params["n"], params["k"]
    window = params.get("fit_window", 0.25)
    cols = read_columns(out / "rho.csv")
    t = np.asarray(cols["t"])
    rho2 = np.asarray(cols["rho2"])
    keep = t <= t[0] + window * (t[-1] - t[0])
    checks = []
    if keep.sum() < 21:
        checks.append(CheckResult(name="interface law", passed=False, detail=f"{int(keep.sum()) - 1} steps in window"))
    else:
        slope = float(np.polyfit(t[keep], rho2[keep], 1)[0])
        predicted = predicted_interface_slope(n, k)
        error = abs(slope - predicted) / abs(predicted)
        checks.append(CheckResult(name="interface law", passed=error <= INTERFACE_REL_TOL,
                                  detail=f"slope {slope:.5g} vs {predicted:.5g} ({error:.2%})"))
    lam = params.get("lam")
    if lam is not None:
        low = min(cols["lambda_star"])
        checks.append(CheckResult(name="star persistence", passed=low >= lam / 2.0,
                                  detail=f"min lambda* {low:.4g} vs lambda/2 {lam / 2.0:.4g}"))
    return checks


def _fit_window(z: np.ndarray) -> np.ndarray:
    mask = z <= ASYMPTOTIC_Z_MAX
    return mask if mask.sum() >= 3 else np.ones_like(z, dtype=bool)


def _verify_audit(out: Path, manifest: RunManifest) -> List[CheckResult]:
    cols = {name: np.asarray(v) for name, v in read_columns(out / "sweep.csv").items()}
    z = cols["z"]
    mask = _fit_window(z)
    exponent = float(np.polyfit(np.log(z[mask]), np.log(cols["a11_minors"][mask]), 1)[0])
    slope = float(np.polyfit(np.log(z[mask]), np.log(cols["dQ_dlambda1"][mask]), 1)[0])
    agreement = float(cols["agreement"].max())
    low = float(cols["min_aii"].min())
    return [
        CheckResult(name="a11 exponent", passed=abs(exponent - A11_EXPONENT[0]) <= A11_EXPONENT[1],
                    detail=f"{exponent:.4f}"),
        CheckResult(name="dQ/dlambda1 slope", passed=abs(slope - LAMBDA1_SLOPE[0]) <= LAMBDA1_SLOPE[1],
                    detail=f"{slope:.4f}"),
        CheckResult(name="min a_ii > 0", passed=low > 0.0, detail=f"{low:.4g}"),
        CheckResult(name="dual method agreement", passed=agreement <= DUAL_METHOD_TOL, detail=f"{agreement:.3e}"),
    ]


def _verify_holder(out: Path, manifest: RunManifest) -> List[CheckResult]:
    report = read_json(out / "report.json")
    norms = report["norms"]
    checks = [CheckResult(name="norms finite", passed=all(
        math.isfinite(norms[key]) for key in ("C0_w", "Calpha_ws", "C2_w", "C2alpha_ws")),
        detail=f"C0_w={norms['C0_w']:.6g}")]
    if report["function"] == "sqrt_z":
        checks.append(CheckResult(name="C0_w(sqrt z) = 1", passed=abs(norms["C0_w"] - 1.0) <= 1e-6,
                                  detail=f"{norms['C0_w']:.9f}"))
    return checks


VERIFIERS: Dict[str, Callable[[Path, RunManifest], List[CheckResult]]] = {
    "shrink_sphere": _verify_sphere,
    "shrink_ellipsoid": _verify_ellipsoid,
    "viscosity_convergence": _verify_viscosity,
    "dilation_uniqueness": _verify_dilation,
    "flat_side_lens": _verify_lens,
    "linearization_audit": _verify_audit,
    "holder_norms": _verify_holder,
}


def verify_run(out_dir: Path) -> VerificationTable:
    """
    Raises:
        ConfigError: falta el manifiesto
        CorruptArtifactError: manifiesto, CSV o JSON ilegibles
    """
    out = Path(out_dir)
    manifest = read_manifest(out)
    name = manifest.scenario.get("name", "?")
    logger.info(f"🔧 Verificando {out} ({name})")
    checks = [CheckResult(name=f"hash {file}", passed=ok, detail="" if ok else "sha256 mismatch", integrity=True)
              for file, ok in check_hashes(out, manifest)]
    if all(c.passed for c in checks):
        checks.append(CheckResult(name="run completed", passed=manifest.exit_code == 0,
                                  detail=str(manifest.stop_reason)))
        if manifest.exit_code == 0:
            checks.extend(VERIFIERS[name](out, manifest))
    table = VerificationTable(scenario=name, checks=checks)
    if table.passed:
        logger.info(f"✅ Verificación completa: {len(checks)} chequeos")
    else:
        failed = [c.name for c in checks if not c.passed]
        logger.warning(f"⚠️ Chequeos fallidos: {failed}")
    return table
