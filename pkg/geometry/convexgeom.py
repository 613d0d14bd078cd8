# geometry/convexgeom.py
"""
Representaciones de hipersuperficies convexas: función soporte sobre una malla
de S^n y parches de grafo. Extracción de curvaturas, orden de inclusión,
dilatación, volumen y punto de Steiner.

El punto con normal exterior ν es F = hν + ∇h, y ⟨F − origen, ν⟩ = h(ν).
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from geometry.errors import (
    ConvexityLossError, DomainError, GridMismatchError, OriginNotInteriorError
)
from geometry.spheregrid import SphereGrid, grid_from_description
from geometry.symfun import CurvatureVector

try:
    from utils.logger import get_logger
    logger = get_logger('convexgeom')
except ImportError:
    import logging
    logger = logging.getLogger('convexgeom')

# ========================================
# SUPERFICIE SOPORTE
# ========================================

@dataclass(frozen=True)
class SupportSurface:
    """Hipersuperficie convexa cerrada muestreada por su función soporte."""

    grid: SphereGrid
    h: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float).reshape(-1)
        if h.size != self.grid.size:
            raise GridMismatchError(f"h tiene {h.size} valores, la malla {self.grid.size} nodos")
        origin = np.array(self.origin, dtype=float).reshape(-1)
        if origin.size != self.grid.n + 1:
            raise DomainError(f"origen de dimensión {origin.size}, se esperaba {self.grid.n + 1}")
        h.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return self.grid.n

    def with_h(self, h: np.ndarray) -> "SupportSurface":
        return SupportSurface(self.grid, h, self.origin)


def from_function(grid: SphereGrid, fn: Callable[[np.ndarray], np.ndarray],
                  origin: Optional[Sequence[float]] = None) -> SupportSurface:
    """Construye h evaluando fn sobre las normales (size, n+1) de la malla."""
    origin = np.zeros(grid.n + 1) if origin is None else np.asarray(origin, dtype=float)
    return SupportSurface(grid, fn(grid.normals()), origin)


def sphere(grid: SphereGrid, radius: float, center: Optional[Sequence[float]] = None) -> SupportSurface:
    """Esfera de radio R; con centro c el soporte es R + ⟨c, ν⟩ respecto al origen."""
    if radius <= 0:
        raise DomainError("el radio debe ser positivo")
    h = np.full(grid.size, float(radius))
    surface = SupportSurface(grid, h, np.zeros(grid.n + 1))
    if center is not None:
        surface = translate(surface, center)
    return surface


def ellipsoid(grid: SphereGrid, semi_axes: Sequence[float]) -> SupportSurface:
    """
    Elipsoide centrado en el origen: h(ν) = √(Σ a_i² ν_i²).

    En una malla axisimétrica los n primeros semiejes deben coincidir (eje x_{n+1}).
    """
    axes = np.asarray(semi_axes, dtype=float).reshape(-1)
    if axes.size != grid.n + 1 or np.any(axes <= 0):
        raise DomainError(f"se esperaban {grid.n + 1} semiejes positivos")
    if grid.kind == "axisymmetric" and not np.all(axes[:-1] == axes[0]):
        raise DomainError("elipsoide no axisimétrico en malla axisimétrica")
    nu = grid.normals()
    if grid.kind == "axisymmetric":
        # representante meridiano: sólo cuentan a (ecuatorial) y c (polar)
        h = np.sqrt(axes[0] ** 2 * nu[:, 0] ** 2 + axes[-1] ** 2 * nu[:, -1] ** 2)
    else:
        h = np.sqrt(np.sum((axes[None, :] * nu) ** 2, axis=1))
    return SupportSurface(grid, h, np.zeros(grid.n + 1))


def lens(grid: SphereGrid, radius: float, flat_radius: float) -> SupportSurface:
    """
    Disco plano de radio ρ₀ (ortogonal al eje) ⊕ bola de radio R.

    h(ν) = R + ρ₀ |ν_horizontal|: dos lados planos de radio ρ₀ unidos por un borde
    tórico; el radio meridiano es R y el tangencial R + ρ₀/senθ.
    """
    if radius <= 0 or flat_radius < 0:
        raise DomainError("lente con parámetros inválidos")
    nu = grid.normals()
    horizontal = np.sqrt(np.sum(nu[:, :-1] ** 2, axis=1))
    return SupportSurface(grid, radius + flat_radius * horizontal, np.zeros(grid.n + 1))


def translate(surface: SupportSurface, offset: Sequence[float]) -> SupportSurface:
    """Traslada el cuerpo (no el origen): h ↦ h + ⟨offset, ν⟩."""
    offset = surface.grid.check_translation(offset)
    return surface.with_h(surface.h + surface.grid.normals() @ offset)


def rebase(surface: SupportSurface, new_origin: Sequence[float]) -> SupportSurface:
    """Mismo cuerpo, soporte tomado respecto a otro origen."""
    new_origin = np.asarray(new_origin, dtype=float)
    shift = surface.grid.check_translation(new_origin - surface.origin)
    h = surface.h - surface.grid.normals() @ shift
    return SupportSurface(surface.grid, h, new_origin)


def steiner_point(surface: SupportSurface) -> np.ndarray:
    """Punto de Steiner en coordenadas absolutas."""
    return surface.origin + surface.grid.steiner_offset(surface.h)


def recenter(surface: SupportSurface) -> SupportSurface:
    """Re-centra el origen en el punto de Steiner."""
    return rebase(surface, steiner_point(surface))


def dilate(surface: SupportSurface, factor: float) -> SupportSurface:
    """h ↦ factor·h respecto al mismo origen; curvaturas escalan por 1/factor."""
    if factor <= 0:
        raise DomainError("el factor de dilatación debe ser positivo")
    return surface.with_h(factor * surface.h)

# ========================================
# CURVATURAS
# ========================================

def radii_matrix(surface: SupportSurface) -> np.ndarray:
    """∇²h + h·I en el marco ortonormal, (size, n, n)."""
    w = surface.grid.hessian(surface.h)
    idx = np.arange(surface.n)
    w[:, idx, idx] += surface.h[:, None]
    return w


def principal_radii(surface: SupportSurface, matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """Radios principales por nodo (size, n), orden ascendente."""
    w = radii_matrix(surface) if matrix is None else matrix
    if surface.grid.diagonal_frame:
        return np.sort(np.diagonal(w, axis1=1, axis2=2), axis=1)
    return np.linalg.eigvalsh(w)


def check_convexity(radii: np.ndarray, t: Optional[float] = None) -> None:
    """Lanza ConvexityLossError en el primer nodo con algún radio <= 0."""
    bad = radii.min(axis=1) <= 0.0
    if np.any(bad):
        node = int(np.argmax(bad))
        raise ConvexityLossError(node, float(radii[node].min()), t)


def all_curvatures(surface: SupportSurface) -> np.ndarray:
    """λ = 1/r en todos los nodos (size, n); exige convexidad estricta."""
    radii = principal_radii(surface)
    check_convexity(radii)
    return 1.0 / radii


def support_curvatures(surface: SupportSurface, node: int) -> CurvatureVector:
    """CurvatureVector en un nodo: λ_i = 1/r_i con r_i autovalores de ∇²h + h."""
    if node < 0 or node >= surface.grid.size:
        raise DomainError(f"nodo {node} fuera de la malla")
    w = radii_matrix(surface)[node]
    radii = np.diagonal(w).copy() if surface.grid.diagonal_frame else np.linalg.eigvalsh(w)
    if radii.min() <= 0.0:
        raise ConvexityLossError(node, float(radii.min()))
    return CurvatureVector(np.sort(1.0 / radii)[::-1])


def mean_curvature(surface: SupportSurface) -> np.ndarray:
    """H = Σ λ_i por nodo."""
    return all_curvatures(surface).sum(axis=1)


def enclosed_volume(surface: SupportSurface) -> float:
    """V = 1/(n+1) ∫ h det(∇²h + h) dσ."""
    w = radii_matrix(surface)
    det = np.prod(np.diagonal(w, axis1=1, axis2=2), axis=1) if surface.grid.diagonal_frame else np.linalg.det(w)
    return float(np.sum(surface.grid.weights() * surface.h * det) / (surface.n + 1))


def boundary_points(surface: SupportSurface) -> np.ndarray:
    """F = origen + hν + ∇h, (size, n+1)."""
    grid = surface.grid
    return surface.origin + surface.h[:, None] * grid.normals() + grid.gradient_ambient(surface.h)


def distance_to_boundary(surface: SupportSurface, points: np.ndarray) -> np.ndarray:
    """
    Distancia con signo al borde (positiva dentro): min_ν h(ν) − ⟨x − origen, ν⟩.

    En mallas axisimétricas los puntos deben estar en el semiplano meridiano
    del representante (x₁ >= 0, resto de coordenadas horizontales nulas).
    """
    rel = np.atleast_2d(points) - surface.origin
    gaps = surface.h[None, :] - rel @ surface.grid.normals().T
    return gaps.min(axis=1)

# ========================================
# INCLUSIÓN Y LEMA DE COTA INFERIOR
# ========================================

class EnclosureReport(BaseModel):
    """Bola interior, diámetro y separación de soporte ⟨q − origen, ν⟩."""

    inner_ball_radius: float = Field(description="ρ = min h")
    diameter: float = Field(description="max h(ν) + h(−ν)")
    support_gap: float = Field(description="δ = min ⟨q − origen, ν⟩ = min h")


def enclosure_report(surface: SupportSurface) -> EnclosureReport:
    h = surface.h
    rho = float(h.min())
    if rho <= 0.0:
        raise OriginNotInteriorError(f"min h = {rho:.3e} <= 0: el origen no es interior")
    diameter = float(np.max(h + h[surface.grid.antipodes()]))
    return EnclosureReport(inner_ball_radius=rho, diameter=diameter, support_gap=rho)


def encloses(a: SupportSurface, b: SupportSurface, tol: float = 0.0) -> bool:
    """True si a contiene a b: h_b <= h_a en cada nodo (mismo origen)."""
    a.grid.require_same(b.grid)
    if not np.array_equal(a.origin, b.origin):
        b = rebase(b, a.origin)
    return bool(np.all(b.h <= a.h + tol))


def hausdorff_distance(a: SupportSurface, b: SupportSurface) -> float:
    """sup |h_a − h_b| (distancia de Hausdorff entre cuerpos convexos)."""
    a.grid.require_same(b.grid)
    if not np.array_equal(a.origin, b.origin):
        b = rebase(b, a.origin)
    return float(np.max(np.abs(a.h - b.h)))

# ========================================
# SNAPSHOTS JSON
# ========================================

class SupportSurfaceSnapshot(BaseModel):
    """Esquema JSON de una superficie: {n, grid, h, origin}."""

    n: int = Field(ge=1)
    grid: dict
    h: List[float]
    origin: List[float]


def to_snapshot(surface: SupportSurface) -> SupportSurfaceSnapshot:
    return SupportSurfaceSnapshot(
        n=surface.n,
        grid=surface.grid.describe(),
        h=[float(x) for x in surface.h],
        origin=[float(x) for x in surface.origin],
    )


def from_snapshot(snapshot: SupportSurfaceSnapshot) -> SupportSurface:
    grid = grid_from_description(snapshot.grid)
    if grid.n != snapshot.n:
        raise GridMismatchError("n del snapshot no coincide con la malla")
    return SupportSurface(grid, np.array(snapshot.h, dtype=float), np.array(snapshot.origin, dtype=float))

# ========================================
# PARCHES DE GRAFO
# ========================================

def graph_second_fundamental_form_batch(du: np.ndarray, d2u: np.ndarray) -> np.ndarray:
    """
    a_ij de un grafo x_{n+1} = u(x) por nodo.

    a = (1/v) P D²u P con P = I − Du Duᵀ/(v(1+v)); sus autovalores son las
    curvaturas principales.

    Args:
        du: (m, n) gradientes
        d2u: (m, n, n) Hessianos simétricos
    """
    du = np.atleast_2d(np.asarray(du, dtype=float))
    d2u = np.asarray(d2u, dtype=float).reshape(du.shape[0], du.shape[1], du.shape[1])
    v = np.sqrt(1.0 + np.sum(du ** 2, axis=1))
    p = np.eye(du.shape[1])[None, :, :] - np.einsum("mi,mj->mij", du, du) / (v * (1.0 + v))[:, None, None]
    return np.einsum("mij,mjk,mkl->mil", p, d2u, p) / v[:, None, None]


def graph_second_fundamental_form(du: Sequence[float], d2u: np.ndarray) -> np.ndarray:
    """a_ij en un nodo (matriz n×n)."""
    du = np.asarray(du, dtype=float).reshape(1, -1)
    return graph_second_fundamental_form_batch(du, np.asarray(d2u, dtype=float)[None])[0]


@dataclass(frozen=True)
class GraphPatch:
    """Función altura u sobre un dominio plano con sus jets."""

    domain: np.ndarray      # (m, n) puntos
    u: np.ndarray           # (m,)
    du: np.ndarray          # (m, n)
    d2u: np.ndarray         # (m, n, n)

    @property
    def v(self) -> np.ndarray:
        return np.sqrt(1.0 + np.sum(self.du ** 2, axis=1))

    @property
    def n(self) -> int:
        return int(self.domain.shape[1])

    @classmethod
    def from_functions(cls, points: np.ndarray, u: Callable, grad: Callable, hess: Callable) -> "GraphPatch":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(
            domain=pts,
            u=np.array([u(p) for p in pts], dtype=float),
            du=np.array([grad(p) for p in pts], dtype=float),
            d2u=np.array([hess(p) for p in pts], dtype=float),
        )

    @classmethod
    def from_samples(cls, axes: Sequence[np.ndarray], values: np.ndarray) -> "GraphPatch":
        """Jets por diferencias centradas (np.gradient) sobre una malla rectangular."""
        axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
        n = len(axes)
        first = np.gradient(values, *axes) if n > 1 else [np.gradient(values, axes[0])]
        second = np.empty((n, n) + values.shape)
        for i in range(n):
            gi = np.gradient(first[i], *axes) if n > 1 else [np.gradient(first[i], axes[0])]
            for j in range(n):
                second[i, j] = gi[j]
        second = 0.5 * (second + np.swapaxes(second, 0, 1))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
        du = np.stack([f.reshape(-1) for f in first], axis=1)
        d2u = np.moveaxis(second.reshape(n, n, -1), -1, 0)
        return cls(domain=pts, u=values.reshape(-1), du=du, d2u=d2u)


def graph_curvatures(patch: GraphPatch) -> np.ndarray:
    """Curvaturas principales por nodo (m, n), orden ascendente."""
    return np.linalg.eigvalsh(graph_second_fundamental_form_batch(patch.du, patch.d2u))
