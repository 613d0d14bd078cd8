# flatside/charts.py
"""
Carta x₁ = f(z, x̄) cerca de la interfaz: se invierte z = u(x₁, x̄) respecto a x₁.

Identidades del cambio de carta (u(f(z, x̄), x̄) = z):

    u_1 = 1/f_z,   u_i = −f_i/f_z,   u_t = −f_t/f_z
    u_11 = −f_zz/f_z³
    u_1j = −f_zj/f_z² + f_zz f_j/f_z³
    u_ij = −u_1 f_ij − u_1i f_j − u_1j f_i − u_11 f_i f_j

En la carta f la ecuación es f_t = −Q_k(b) con b = c·f_z y c = a·v.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, linear_sum_assignment

from config import Z_FLOOR, Z_RATIO
from flatside.pressure import PressureProfile, pressure_rates
from geometry.convexgeom import graph_second_fundamental_form
from geometry.errors import DegenerateChartError, DomainError, InversionError

try:
    from utils.logger import get_logger
    logger = get_logger('charts')
except ImportError:
    import logging
    logger = logging.getLogger('charts')

# ========================================
# JETS
# ========================================

@dataclass(frozen=True)
class FJet:
    """Jet de segundo orden de f en (z, x̄); índices tangenciales i, j = 2..n."""

    z: float
    xbar: np.ndarray
    f: float
    f_z: float
    f_x: np.ndarray
    f_zz: float
    f_zx: np.ndarray
    f_xx: np.ndarray
    f_t: Optional[float] = None

    @property
    def n(self) -> int:
        return int(np.size(self.xbar)) + 1


@dataclass(frozen=True)
class UJet:
    """Jet de segundo orden de la altura u en x = (x₁, x̄)."""

    x: np.ndarray
    u: float
    du: np.ndarray
    d2u: np.ndarray
    u_t: Optional[float] = None


def geometric_z_grid(z_max: float, ratio: float = Z_RATIO, z_min: float = Z_FLOOR) -> np.ndarray:
    """z_j = z_max·q^j hasta z_min (incluido el primer valor <= z_min)."""
    if not 0 < z_min < z_max or not 0 < ratio < 1:
        raise DomainError("malla geométrica en z inválida")
    count = int(np.ceil(np.log(z_min / z_max) / np.log(ratio))) + 1
    return z_max * ratio ** np.arange(count)


def model_jet(z: float, xbar: Sequence[float], c0: float, a: float, c: Sequence[float],
              e: Optional[Sequence[float]] = None) -> FJet:
    """
    Jet del modelo f = c₀ + a√z + √z·Σe_i x_i − Σc_i x_i²/2.

    Es la forma local de la carta en un lado plano con (★★): f_z ~ a/(2√z),
    −z^{3/2}f_zz → a/4 y −f_ii → c_i.
    """
    if z <= 0:
        raise DomainError("z debe ser positivo")
    x = np.asarray(xbar, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    e = np.zeros_like(x) if e is None else np.asarray(e, dtype=float).reshape(-1)
    if c.size != x.size or e.size != x.size:
        raise DomainError("dimensiones de x̄, c y e no coinciden")
    s = np.sqrt(z)
    tilt = float(e @ x)
    return FJet(
        z=float(z),
        xbar=x,
        f=c0 + (a + tilt) * s - 0.5 * float(np.sum(c * x ** 2)),
        f_z=(a + tilt) / (2.0 * s),
        f_x=s * e - c * x,
        f_zz=-(a + tilt) / (4.0 * z * s),
        f_zx=e / (2.0 * s),
        f_xx=-np.diag(c),
    )


def u_jet_from_f(jet: FJet) -> UJet:
    """f-jet → u-jet por las identidades del cambio de carta."""
    if jet.f_z == 0:
        raise DegenerateChartError("f_z = 0: la carta no es invertible")
    fz, fi, fzz = jet.f_z, jet.f_x, jet.f_zz
    m = fi.size
    u1 = 1.0 / fz
    u11 = -fzz / fz ** 3
    u1j = -jet.f_zx / fz ** 2 + fzz * fi / fz ** 3
    uij = -u1 * jet.f_xx - np.outer(u1j, fi) - np.outer(fi, u1j) - u11 * np.outer(fi, fi)

    du = np.empty(m + 1)
    du[0] = u1
    du[1:] = -fi * u1
    d2u = np.empty((m + 1, m + 1))
    d2u[0, 0] = u11
    d2u[0, 1:] = u1j
    d2u[1:, 0] = u1j
    d2u[1:, 1:] = uij
    u_t = None if jet.f_t is None else -jet.f_t * u1
    x = np.concatenate([[jet.f], jet.xbar])
    return UJet(x=x, u=jet.z, du=du, d2u=d2u, u_t=u_t)


def f_jet_from_u(jet: UJet) -> FJet:
    """u-jet → f-jet (inversa de u_jet_from_f)."""
    u1 = float(jet.du[0])
    if u1 == 0:
        raise DegenerateChartError("u_{x1} = 0: la carta f no existe")
    ui = jet.du[1:]
    u11 = float(jet.d2u[0, 0])
    u1j = jet.d2u[0, 1:]
    uij = jet.d2u[1:, 1:]

    fz = 1.0 / u1
    fi = -ui / u1
    fzz = -u11 * fz ** 3
    fzj = -fz ** 2 * (u1j + u11 * fi)
    fij = -(uij + np.outer(u1j, fi) + np.outer(fi, u1j) + u11 * np.outer(fi, fi)) / u1
    f_t = None if jet.u_t is None else -jet.u_t * fz
    return FJet(z=float(jet.u), xbar=np.asarray(jet.x[1:], dtype=float), f=float(jet.x[0]),
                f_z=fz, f_x=fi, f_zz=fzz, f_zx=fzj, f_xx=fij, f_t=f_t)

# ========================================
# INVERSIÓN DEL PERFIL
# ========================================

@dataclass
class FChart:
    """Jets de f a lo largo de una malla en z para un x̄ fijo."""

    z: np.ndarray
    xbar: np.ndarray
    jets: List[FJet]
    interface_radius: float
    u_jets: List[UJet] = field(default_factory=list)

    @property
    def f(self) -> np.ndarray:
        return np.array([j.f for j in self.jets])

    @property
    def f_z(self) -> np.ndarray:
        return np.array([j.f_z for j in self.jets])

    def identity_defect(self) -> float:
        """max |u_{x1}·f_z − 1| con u_{x1} recalculado desde el perfil."""
        return float(max(abs(u.du[0] * j.f_z - 1.0) for u, j in zip(self.u_jets, self.jets)))

    def validate(self) -> float:
        """Error relativo máximo entre f_z y np.gradient de f en la malla (log z)."""
        xi = np.log(self.z)
        direct = np.gradient(self.f, xi) / self.z
        inner = slice(1, -1)
        return float(np.max(np.abs(direct[inner] - self.f_z[inner]) / np.abs(self.f_z[inner])))


class _RadialProfile:
    """g(r) interpolado con spline cúbico a partir de (ρ, 0) y los nodos positivos."""

    def __init__(self, p: PressureProfile):
        keep = p.r > p.rho + 0.05 * p.dr
        r = p.r[keep]
        g = p.g[keep]
        if p.rho > 0:
            r = np.concatenate([[p.rho], r])
            g = np.concatenate([[0.0], g])
        else:
            # g impar en r cuando no hay lado plano
            r = np.concatenate([-r[::-1], r])
            g = np.concatenate([-g[::-1], g])
        if r.size < 4:
            raise InversionError("perfil con muy pocos nodos resueltos")
        self.rho = p.rho
        self.spline = CubicSpline(r, g)
        self.r_max = float(r[-1])
        dense = np.linspace(max(p.rho, 0.0), self.r_max, 4 * r.size)
        if np.any(self.spline(dense, 1) <= 0):
            raise InversionError("g no es estrictamente creciente en r: la corte no es monótona")
        self.u_t = None
        try:
            rates = pressure_rates(p, 0.4)
            r_pos = p.r[rates.index]
            self.u_t = CubicSpline(r_pos, rates.u_t)
        except Exception as e:
            logger.warning(f"⚠️ Sin u_t para la carta: {type(e).__name__}")

    def radius(self, z: float) -> float:
        target = np.sqrt(z)
        lo = max(self.rho, 0.0)
        if target >= float(self.spline(self.r_max)):
            raise InversionError(f"z={z:.3e} fuera del rango del perfil")
        return float(brentq(lambda r: float(self.spline(r)) - target, lo, self.r_max, xtol=1e-15, rtol=4.0 * np.finfo(float).eps))

    def derivatives(self, r: float):
        g, g1, g2 = (float(self.spline(r, d)) for d in (0, 1, 2))
        return g * g, 2.0 * g * g1, 2.0 * g1 ** 2 + 2.0 * g * g2


def graph_to_f(p: PressureProfile, xbar: Optional[Sequence[float]] = None,
               z: Optional[np.ndarray] = None) -> FChart:
    """
    f(z, x̄) = √(R(z)² − |x̄|²) con R(z) el radio donde u = z.

    Raises:
        InversionError: perfil no monótono o z fuera de rango
    """
    profile = _RadialProfile(p)
    x = np.zeros(p.n - 1) if xbar is None else np.asarray(xbar, dtype=float).reshape(-1)
    if x.size != p.n - 1:
        raise DomainError(f"x̄ debe tener {p.n - 1} componentes")
    if z is None:
        z_top = min(0.1, 0.25 * float(p.u.max()))
        z = geometric_z_grid(z_top)
    s2 = float(x @ x)
    m = x.size

    jets, u_jets = [], []
    for zj in np.asarray(z, dtype=float):
        radius = profile.radius(zj)
        if radius ** 2 <= s2:
            raise InversionError(f"|x̄| >= R(z) en z={zj:.3e}")
        _, U1, U2 = profile.derivatives(radius)
        r1 = 1.0 / U1
        r2 = -U2 * r1 ** 3
        f = np.sqrt(radius ** 2 - s2)
        fz = radius * r1 / f
        fzz = (r1 ** 2 + radius * r2) / f - (radius * r1) ** 2 / f ** 3
        fx = -x / f
        fzx = radius * r1 * x / f ** 3
        fxx = -np.eye(m) / f - np.outer(x, x) / f ** 3
        f_t = None
        if profile.u_t is not None and radius <= profile.u_t.x[-1]:
            # u_t radial; u_{x1} = U'(R)·f/R
            f_t = -float(profile.u_t(radius)) / (U1 * f / radius)
        jets.append(FJet(z=float(zj), xbar=x, f=f, f_z=fz, f_x=fx, f_zz=fzz, f_zx=fzx, f_xx=fxx, f_t=f_t))

        point = np.concatenate([[f], x])
        du = U1 * point / radius
        d2u = U2 * np.outer(point, point) / radius ** 2 + (U1 / radius) * (
            np.eye(m + 1) - np.outer(point, point) / radius ** 2)
        u_jets.append(UJet(x=point, u=float(zj), du=du, d2u=d2u))

    chart = FChart(z=np.asarray(z, dtype=float), xbar=x, jets=jets, interface_radius=p.rho, u_jets=u_jets)
    logger.info(f"✅ Carta f: {len(jets)} valores de z en [{chart.z.min():.1e}, {chart.z.max():.1e}]")
    return chart


def f_grid_values(p: PressureProfile, z: np.ndarray, x2) -> np.ndarray:
    """
    Valores f(z, x̄) sobre la malla z × x̄, (nz, *nx).

    `x2` es un eje (x₂, resto de x̄ nulo) o una lista de hasta n−1 ejes.
    """
    if len(x2) and np.ndim(x2[0]) == 0:
        axes = [np.asarray(x2, dtype=float)]
    else:
        axes = [np.asarray(a, dtype=float) for a in x2]
    if not axes or len(axes) > p.n - 1:
        raise DomainError(f"se esperaban entre 1 y {p.n - 1} ejes de x̄")
    shape = tuple(a.size for a in axes)
    out = np.empty((len(z),) + shape)
    for index in np.ndindex(*shape):
        xbar = np.zeros(p.n - 1)
        xbar[:len(axes)] = [axes[i][index[i]] for i in range(len(axes))]
        out[(slice(None),) + index] = graph_to_f(p, xbar, z).f
    return out

# ========================================
# CONDICIÓN (★★)
# ========================================

class StarStarReport(BaseModel):
    holds: bool
    min_eigenvalue: float
    eigenvalues: List[float] = Field(description="mínimo autovalor por z")
    z: List[float]


def starstar_matrix(jet: FJet) -> np.ndarray:
    """[−z^{3/2}f_zz, z^{3/4}f_zi; z^{3/4}f_zi, −f_ij]."""
    m = jet.f_x.size
    out = np.empty((m + 1, m + 1))
    out[0, 0] = -jet.z ** 1.5 * jet.f_zz
    out[0, 1:] = jet.z ** 0.75 * jet.f_zx
    out[1:, 0] = out[0, 1:]
    out[1:, 1:] = -jet.f_xx
    return out


def check_starstar(jets: Sequence[FJet], lambda_bar: float) -> StarStarReport:
    """Menor autovalor de la matriz (★★) en el barrido; se cumple si >= λ̄."""
    eigs = [float(np.linalg.eigvalsh(starstar_matrix(j)).min()) for j in jets]
    low = min(eigs)
    return StarStarReport(holds=bool(low >= lambda_bar), min_eigenvalue=low, eigenvalues=eigs,
                          z=[j.z for j in jets])

# ========================================
# MATRIZ b
# ========================================

@dataclass(frozen=True)
class BMatrix:
    b: np.ndarray
    asymptotic: np.ndarray
    second_form: np.ndarray
    v: float
    f_z: float

    def eigenvalues(self) -> np.ndarray:
        """Autovalores de b en orden descendente."""
        return np.linalg.eigvalsh(self.b)[::-1]


def assemble_b_matrix(jet: FJet) -> BMatrix:
    """
    b_ij = c_ij·f_z con c = a·v y a la segunda forma fundamental del grafo u.

    La salida secundaria `asymptotic` contiene −f_zz/f_z², −f_zi/f_z + f_zz f_i/f_z², −f_ij.

    Raises:
        DegenerateChartError: f_z = 0
    """
    if jet.f_z == 0 or not np.isfinite(jet.f_z):
        raise DegenerateChartError("f_z = 0: b no está definida")
    u = u_jet_from_f(jet)
    second_form = graph_second_fundamental_form(u.du, u.d2u)
    v = float(np.sqrt(1.0 + u.du @ u.du))
    b = second_form * v * jet.f_z
    b = 0.5 * (b + b.T)

    m = jet.f_x.size
    asym = np.empty((m + 1, m + 1))
    asym[0, 0] = -jet.f_zz / jet.f_z ** 2
    asym[0, 1:] = -jet.f_zx / jet.f_z + jet.f_zz * jet.f_x / jet.f_z ** 2
    asym[1:, 0] = asym[0, 1:]
    asym[1:, 1:] = -jet.f_xx
    return BMatrix(b=b, asymptotic=asym, second_form=second_form, v=v, f_z=float(jet.f_z))


class EigenAsymptoticsReport(BaseModel):
    z: List[float]
    sqrt_z_lambda1: List[float]
    mu: float = Field(description="min √z·λ₁")
    nu: float = Field(description="max √z·λ₁")
    flatness: float = Field(description="(ν − μ)/μ")
    tangential_deviation: List[float] = Field(description="max_i |λ_i − (−f_ii)| por z")
    deviation_slope: Optional[float] = None
    limit_eigenvalues: List[float]
    interface_curvatures: Optional[List[float]] = None
    interface_error: Optional[float] = None
    failures: List[str] = Field(default_factory=list)


def eigen_asymptotics_check(jets: Sequence[FJet],
                            interface_curvatures: Optional[Sequence[float]] = None) -> EigenAsymptoticsReport:
    """
    (a) acotación de √z·λ₁; (b) λ_i − (−f_ii) → 0 con emparejamiento de ramas;
    (c) límite de λ_i (i >= 2) frente a las curvaturas de la interfaz.
    """
    ordered = sorted(jets, key=lambda j: -j.z)
    zs, scaled, deviations, tangential, failures = [], [], [], None, []
    for jet in ordered:
        try:
            eig = assemble_b_matrix(jet).eigenvalues()
        except (DegenerateChartError, np.linalg.LinAlgError) as e:
            failures.append(f"z={jet.z:.3e}: {e}")
            continue
        target = -np.diag(jet.f_xx)
        rest = eig[1:]
        cost = np.abs(rest[:, None] - target[None, :])
        rows, cols = linear_sum_assignment(cost)
        matched = np.empty_like(target)
        matched[cols] = rest[rows]
        zs.append(jet.z)
        scaled.append(float(np.sqrt(jet.z) * eig[0]))
        deviations.append(float(np.max(np.abs(matched - target))) if target.size else 0.0)
        tangential = matched

    if not zs:
        raise DegenerateChartError("ningún punto del barrido produjo autovalores")

    slope = None
    dev = np.asarray(deviations)
    if dev.size >= 3 and np.all(dev > 0):
        slope = float(np.polyfit(np.log(zs), np.log(dev), 1)[0])

    mu, nu = min(scaled), max(scaled)
    report = EigenAsymptoticsReport(
        z=zs, sqrt_z_lambda1=scaled, mu=mu, nu=nu, flatness=(nu - mu) / mu if mu > 0 else float("inf"),
        tangential_deviation=deviations, deviation_slope=slope,
        limit_eigenvalues=[float(x) for x in tangential], failures=failures,
    )
    if interface_curvatures is not None:
        ref = np.sort(np.asarray(interface_curvatures, dtype=float))
        got = np.sort(np.asarray(tangential))
        report.interface_curvatures = ref.tolist()
        report.interface_error = float(np.max(np.abs(got - ref) / np.abs(ref)))
    return report
