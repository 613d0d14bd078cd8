# flatside/holder.py
"""
Métrica singular ds̄² = dz²/z² + |dx̄|² (z <= 1) y normas de Hölder ponderadas.

Para z > 1 se usa la extensión euclídea: la coordenada φ(z) = ln z si z <= 1 y
φ(z) = z − 1 si z > 1 es C¹ y s̄ es la distancia euclídea de (φ(z), x̄).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from config import HOLDER_EXACT_POINTS, HOLDER_PAIR_SAMPLES, HOLDER_SEED
from geometry.errors import DomainError, ResolutionError

try:
    from utils.logger import get_logger
    logger = get_logger('holder')
except ImportError:
    import logging
    logger = logging.getLogger('holder')

Z_RESOLUTION = 1e-4
TAIL_LEVELS = 5
PAIR_CHUNK = 256

# ========================================
# DISTANCIA
# ========================================

@dataclass(frozen=True)
class SingularMetricPoint:
    """Punto (z, x̄[, t]) del dominio del lado plano."""

    z: float
    xbar: tuple = ()
    t: Optional[float] = None

    def __post_init__(self):
        if self.z < 0:
            raise DomainError("z debe ser >= 0")
        object.__setattr__(self, "xbar", tuple(float(x) for x in np.atleast_1d(self.xbar)))


def log_coordinate(z: np.ndarray) -> np.ndarray:
    """φ(z): ln z en (0, 1], z − 1 en (1, ∞)."""
    z = np.asarray(z, dtype=float)
    return np.where(z <= 1.0, np.log(np.minimum(z, 1.0)), z - 1.0)


def _sbar(z1, x1, z2, x2) -> np.ndarray:
    dphi = log_coordinate(z1) - log_coordinate(z2)
    dx = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    dx2 = np.sum(dx ** 2, axis=-1) if dx.ndim else dx ** 2
    return np.sqrt(dphi ** 2 + dx2)


def hyperbolic_distance(p1: SingularMetricPoint, p2: SingularMetricPoint) -> float:
    """
    s̄(P₁, P₂); si ambos puntos traen t se suma √|t₁ − t₂| (variante parabólica).

    Raises:
        DomainError: z <= 0 o dimensiones de x̄ distintas
    """
    if p1.z <= 0 or p2.z <= 0:
        raise DomainError("s̄ sólo está definida para z > 0")
    if len(p1.xbar) != len(p2.xbar):
        raise DomainError("x̄ de dimensiones distintas")
    d = float(_sbar(p1.z, np.array(p1.xbar), p2.z, np.array(p2.xbar)))
    if p1.t is not None and p2.t is not None:
        d += float(np.sqrt(abs(p1.t - p2.t)))
    return d

# ========================================
# SEMINORMAS
# ========================================

@dataclass
class _Samples:
    """Puntos aplanados: coordenada métrica φ, x̄ (N, m), tiempo opcional y valores."""

    phi: np.ndarray
    x: np.ndarray
    t: Optional[np.ndarray]
    values: np.ndarray


def _pair_distance(s: _Samples, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    dx2 = np.sum((s.x[i] - s.x[j]) ** 2, axis=-1)
    d = np.sqrt((s.phi[i] - s.phi[j]) ** 2 + dx2)
    if s.t is not None:
        d = d + np.sqrt(np.abs(s.t[i] - s.t[j]))
    return d


def holder_seminorm(s: _Samples, alpha: float, seed: int = HOLDER_SEED) -> tuple:
    """
    sup |v(P₁) − v(P₂)| / d(P₁, P₂)^α.

    Exacta sobre todos los pares hasta HOLDER_EXACT_POINTS puntos; por encima,
    HOLDER_PAIR_SAMPLES pares aleatorios con semilla fija (cota inferior).

    Returns:
        (valor, exacta)
    """
    count = s.values.size
    if count < 2:
        return 0.0, True
    best = 0.0
    if count <= HOLDER_EXACT_POINTS:
        cols = np.arange(count)
        for start in range(0, count, PAIR_CHUNK):
            rows = np.arange(start, min(start + PAIR_CHUNK, count))
            i, j = np.meshgrid(rows, cols, indexing="ij")
            mask = j > i
            i, j = i[mask], j[mask]
            if i.size == 0:
                continue
            d = _pair_distance(s, i, j)
            ok = d > 0
            if np.any(ok):
                best = max(best, float(np.max(np.abs(s.values[i[ok]] - s.values[j[ok]]) / d[ok] ** alpha)))
        return best, True

    rng = np.random.default_rng(seed)
    i = rng.integers(0, count, HOLDER_PAIR_SAMPLES)
    j = rng.integers(0, count, HOLDER_PAIR_SAMPLES)
    d = _pair_distance(s, i, j)
    ok = d > 0
    best = float(np.max(np.abs(s.values[i[ok]] - s.values[j[ok]]) / d[ok] ** alpha))
    logger.info(f"⚠️ Seminorma estimada con {HOLDER_PAIR_SAMPLES} pares de {count} puntos (cota inferior)")
    return best, False

# ========================================
# NORMAS PONDERADAS
# ========================================

class HolderNorms(BaseModel):
    """Normas discretas sobre una malla (z, x̄[, t]) con x̄ ∈ R^m."""

    C0_w: float
    Calpha_ws: float
    C2_w: float
    C2alpha_ws: float
    alpha: float
    tangential_dims: int = Field(default=1, description="Número de ejes de x̄")
    exact_pairs: bool = Field(description="False si alguna seminorma se estimó por submuestreo")
    f_circ_max: float
    extends_continuously: Dict[str, bool]
    tail_increments: Dict[str, List[float]]


def _tangential_axes(x) -> List[np.ndarray]:
    """Un eje (x₂) o una lista de ejes (x₂, …, x_n)."""
    if len(x) and np.ndim(x[0]) == 0:
        return [np.asarray(x, dtype=float)]
    axes = [np.asarray(a, dtype=float).reshape(-1) for a in x]
    if not axes or any(a.size == 0 for a in axes):
        raise DomainError("cada eje de x̄ necesita al menos un punto")
    return axes


def _fit_circ(z: np.ndarray, values: np.ndarray) -> np.ndarray:
    """f°: intersección de un ajuste cuadrático en √z sobre los 5 menores z (eje z = 1)."""
    order = np.argsort(z)[:5]
    s = np.sqrt(z[order])
    vander = np.stack([np.ones_like(s), s, s ** 2], axis=1)
    moved = np.moveaxis(np.take(values, order, axis=1), 1, 0)
    flat = moved.reshape(len(order), -1)
    coeffs, *_ = np.linalg.lstsq(vander, flat, rcond=None)
    return coeffs[0].reshape(moved.shape[1:])


def _d_dz(values: np.ndarray, z: np.ndarray, zcol: np.ndarray) -> np.ndarray:
    # derivada en ξ = ln z (malla uniforme si z es geométrica)
    return np.gradient(values, np.log(z), axis=1) / zcol


def _d_dx(values: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    if x.size < 2:
        return np.zeros_like(values)
    return np.gradient(values, x, axis=axis)


def _pack(t, grids: List[np.ndarray], values: np.ndarray, with_phi: bool) -> _Samples:
    nt = values.shape[0]
    mesh = np.meshgrid(np.arange(nt) if t is None else t, *grids, indexing="ij")
    if with_phi:
        phi, xs = log_coordinate(mesh[1]).reshape(-1), mesh[2:]
    else:
        phi, xs = np.zeros(values.size), mesh[1:]
    return _Samples(
        phi=phi,
        x=np.stack([m.reshape(-1) for m in xs], axis=-1),
        t=None if t is None else mesh[0].reshape(-1).astype(float),
        values=values.reshape(-1),
    )


def _tail(values: np.ndarray, z: np.ndarray) -> List[float]:
    order = np.argsort(z)[:TAIL_LEVELS + 1][::-1]
    levels = np.moveaxis(np.take(values, order, axis=1), 1, 0)
    return [float(np.max(np.abs(levels[a + 1] - levels[a]))) for a in range(len(order) - 1)]


def _extends(increments: List[float], scale: float) -> bool:
    """Cauchy hacia z → 0: incrementos finitos y sin crecer al final de la cola."""
    if not increments or not all(np.isfinite(increments)):
        return False
    floor = 1e-8 * max(1.0, scale)
    return increments[-1] <= max(increments[0], floor)


def weighted_holder_norms(z: Sequence[float], x, values: np.ndarray, alpha: float,
                          t: Optional[Sequence[float]] = None, seed: int = HOLDER_SEED) -> HolderNorms:
    """
    Normas C⁰_w, C^α_{w,s̄}, C²_w y C^{2+α}_{w,s̄} de muestras f(z, x̄[, t]).

    Las derivadas tangenciales recorren todos los ejes de x̄: cada componente
    f_i y cada f_ij (i <= j) suma su propia norma.

    Args:
        z: malla en z (geométrica hacia 0), (nz,)
        x: un eje tangencial (nx,) o una lista de ejes [x₂, …, x_n]
        values: (nz, *nx) o (nt, nz, *nx) con t
        alpha: exponente de Hölder en (0, 1]

    Raises:
        ResolutionError: min z > 1e−4 o menos de 5 niveles en z
    """
    z = np.asarray(z, dtype=float)
    axes = _tangential_axes(x)
    m = len(axes)
    if not 0 < alpha <= 1:
        raise DomainError("α debe estar en (0, 1]")
    if np.any(z <= 0):
        raise DomainError("z debe ser positivo")
    if z.size < 5 or z.min() > Z_RESOLUTION:
        raise ResolutionError(f"la malla en z debe bajar hasta {Z_RESOLUTION} con >= 5 niveles")
    f = np.asarray(values, dtype=float)
    if t is None:
        f = f[None, ...]
        t_axis = None
    else:
        t_axis = np.asarray(t, dtype=float)
    expected = (1 if t is None else t_axis.size, z.size) + tuple(a.size for a in axes)
    if f.shape != expected:
        raise DomainError(f"values con forma {np.shape(values)} no coincide con la malla {expected[1:]}")

    zcol = z.reshape((1, -1) + (1,) * m)
    sqrt_z = np.sqrt(zcol)
    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    exact = True

    def lift(circ: np.ndarray) -> np.ndarray:
        return np.expand_dims(circ, 1)

    def calpha_plain(g2: np.ndarray) -> float:
        nonlocal exact
        semi, ok = holder_seminorm(_pack(t_axis, axes, g2, with_phi=False), alpha, seed)
        exact = exact and ok
        return float(np.max(np.abs(g2))) + semi

    def calpha_sbar(g3: np.ndarray) -> float:
        nonlocal exact
        semi, ok = holder_seminorm(_pack(t_axis, [z] + axes, g3, with_phi=True), alpha, seed)
        exact = exact and ok
        return float(np.max(np.abs(g3))) + semi

    def calpha_w(g3: np.ndarray) -> float:
        circ = _fit_circ(z, g3)
        return calpha_plain(circ) + calpha_sbar((g3 - lift(circ)) / sqrt_z)

    def tilde(g3: np.ndarray) -> np.ndarray:
        return (g3 - lift(_fit_circ(z, g3))) / sqrt_z

    f_circ = _fit_circ(z, f)                        # (nt, *nx)
    f_tilde = (f - lift(f_circ)) / sqrt_z

    # --- C⁰_w y C^α_{w,s̄} ---
    c0_w = float(np.max(np.abs(f_circ))) + float(np.max(np.abs(f_tilde)))
    calpha = calpha_plain(f_circ) + calpha_sbar(f_tilde)

    # --- C²_w ---
    # f° tiene los ejes tangenciales desde 1; las muestras completas desde 2
    circ_x = [_d_dx(f_circ, axes[i], 1 + i) for i in range(m)]
    circ_xx = [_d_dx(circ_x[i], axes[j], 1 + j) for i, j in pairs]
    t_z = _d_dz(f_tilde, z, zcol)
    t_x = [_d_dx(f_tilde, axes[i], 2 + i) for i in range(m)]
    t_zx = [_d_dx(t_z, axes[i], 2 + i) for i in range(m)]
    t_xx = [_d_dx(t_x[i], axes[j], 2 + j) for i, j in pairs]
    circ_c2 = float(np.max(np.abs(f_circ) + sum(np.abs(g) for g in circ_x + circ_xx)))
    tilde_terms = [f_tilde, zcol * t_z] + t_x + [zcol ** 2 * _d_dz(t_z, z, zcol)] + [zcol * g for g in t_zx] + t_xx
    c2_w = circ_c2 + sum(float(np.max(np.abs(term))) for term in tilde_terms)

    f_z = _d_dz(f, z, zcol)
    f_zz = _d_dz(f_z, z, zcol)
    f_x = [_d_dx(f, axes[i], 2 + i) for i in range(m)]
    f_zx = [_d_dx(f_z, axes[i], 2 + i) for i in range(m)]
    f_xx = [_d_dx(f_x[i], axes[j], 2 + j) for i, j in pairs]
    combos = {
        "f_tilde": f_tilde,
        "sqrt_z_f_z": sqrt_z * f_z,
        "f_i_tilde": np.stack([tilde(g) for g in f_x]),
        "z32_f_zz": zcol ** 1.5 * f_zz,
        "sqrt_z_f_zi": np.stack([sqrt_z * g for g in f_zx]),
        "f_ij_tilde": np.stack([tilde(g) for g in f_xx]),
    }
    # las componentes apiladas se reducen con el máximo
    tails = {name: _tail(v if v.ndim == f.ndim else np.moveaxis(v, 0, -1), z) for name, v in combos.items()}
    extends = {name: _extends(tails[name], float(np.max(np.abs(combos[name])))) for name in combos}

    # --- C^{2+α}_{w,s̄} ---
    c2alpha = circ_c2
    for g in circ_xx:
        semi, ok = holder_seminorm(_pack(t_axis, axes, g, with_phi=False), alpha, seed)
        exact = exact and ok
        c2alpha += semi
    for term in [f, zcol * f_z] + f_x + [zcol ** 2 * f_zz] + [zcol * g for g in f_zx] + f_xx:
        c2alpha += calpha_w(term)

    report = HolderNorms(
        C0_w=c0_w, Calpha_ws=calpha, C2_w=c2_w, C2alpha_ws=c2alpha, alpha=alpha, tangential_dims=m,
        exact_pairs=exact, f_circ_max=float(np.max(np.abs(f_circ))),
        extends_continuously=extends, tail_increments=tails,
    )
    logger.info(f"✅ Normas ponderadas (m={m}): C0_w={c0_w:.6g}, C2_w={c2_w:.6g} (pares exactos={exact})")
    return report


def sbar_seminorm(z: Sequence[float], x, values: np.ndarray, alpha: float,
                  t: Optional[Sequence[float]] = None, seed: int = HOLDER_SEED) -> tuple:
    """[v]_{α,s̄} de muestras (nz, *nx) o (nt, nz, *nx); devuelve (valor, exacta)."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("z debe ser positivo")
    axes = _tangential_axes(x)
    v = np.asarray(values, dtype=float)
    if t is None:
        v = v[None, ...]
    if v.shape[1:] != (z.size,) + tuple(a.size for a in axes):
        raise DomainError(f"values con forma {np.shape(values)} no coincide con la malla")
    return holder_seminorm(_pack(None if t is None else np.asarray(t, dtype=float),
                                 [z] + axes, v, with_phi=True), alpha, seed)
