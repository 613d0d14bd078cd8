# geometry/spheregrid.py
"""
Mallas de direcciones sobre S^n con operadores de Hessiano dispersos.

- AxisymmetricGrid: malla de latitud 1-D para datos con simetría axial, n >= 2.
- LatLongGrid: malla equiangular (θ, φ) para n = 2.

Los nodos están centrados en celda (θ_j = (j+½)Δθ), de modo que ningún nodo cae
sobre un polo; los stencils cruzan el polo con celdas fantasma reflejadas
(h(−θ, φ) = h(θ, φ+π)), que es el límite axisimétrico en el polo.
El Hessiano se expresa en un marco ortonormal tangente.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gamma

from geometry.errors import DomainError, GridMismatchError


def sphere_area(n: int) -> float:
    """|S^n| = 2π^{(n+1)/2} / Γ((n+1)/2)."""
    return float(2.0 * np.pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0))


class SphereGrid(ABC):
    """Malla abstracta de normales unitarias."""

    kind: str = "abstract"
    diagonal_frame: bool = False

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"dimensión n={n} inválida")
        self.n = int(n)
        self._hessian_ops: Dict[Tuple[int, int], sp.csr_matrix] = {}
        self._gradient_ops: List[sp.csr_matrix] = []

    # --- geometría de la malla ---

    @property
    @abstractmethod
    def size(self) -> int: ...

    @property
    @abstractmethod
    def spacing(self) -> float:
        """Espaciado geodésico nominal (Δθ)."""

    @property
    @abstractmethod
    def cfl_spacing(self) -> float:
        """Menor distancia geodésica entre vecinos (controla la estabilidad)."""

    @abstractmethod
    def normals(self) -> np.ndarray:
        """(size, n+1) normales unitarias."""

    @abstractmethod
    def frames(self) -> np.ndarray:
        """(size, n, n+1) marco ortonormal tangente en cada nodo."""

    @abstractmethod
    def weights(self) -> np.ndarray:
        """Pesos de cuadratura, normalizados a |S^n|."""

    @abstractmethod
    def antipodes(self) -> np.ndarray:
        """Índice del nodo −ν para cada nodo."""

    @abstractmethod
    def describe(self) -> dict: ...

    @abstractmethod
    def steiner_offset(self, h: np.ndarray) -> np.ndarray:
        """Punto de Steiner relativo al origen del soporte."""

    def check_translation(self, offset: np.ndarray) -> np.ndarray:
        offset = np.asarray(offset, dtype=float).reshape(-1)
        if offset.size != self.n + 1:
            raise DomainError(f"traslación de dimensión {offset.size}, se esperaba {self.n + 1}")
        return offset

    # --- operadores ---

    def hessian_operator(self, a: int, b: int) -> sp.csr_matrix:
        key = (min(a, b), max(a, b))
        return self._hessian_ops.get(key, None)

    def hessian(self, f: np.ndarray) -> np.ndarray:
        """Hessiano covariante en el marco ortonormal, (size, n, n)."""
        f = np.asarray(f, dtype=float)
        out = np.zeros((self.size, self.n, self.n))
        for (a, b), op in self._hessian_ops.items():
            values = op @ f
            out[:, a, b] = values
            out[:, b, a] = values
        return out

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Gradiente en el marco ortonormal, (size, n)."""
        f = np.asarray(f, dtype=float)
        out = np.zeros((self.size, self.n))
        for a, op in enumerate(self._gradient_ops):
            if op is not None:
                out[:, a] = op @ f
        return out

    def gradient_ambient(self, f: np.ndarray) -> np.ndarray:
        """∇f como vector de R^{n+1}, (size, n+1)."""
        return np.einsum("ia,iaj->ij", self.gradient(f), self.frames())

    def laplacian_matrix(self) -> sp.csr_matrix:
        ops = [self._hessian_ops[(a, a)] for a in range(self.n) if (a, a) in self._hessian_ops]
        return sum(ops[1:], ops[0]).tocsr()

    def same_as(self, other: "SphereGrid") -> bool:
        return self.describe() == other.describe()

    def require_same(self, other: "SphereGrid") -> None:
        if not self.same_as(other):
            raise GridMismatchError(f"mallas distintas: {self.describe()} vs {other.describe()}")


# ========================================
# MALLA AXISIMÉTRICA
# ========================================

class AxisymmetricGrid(SphereGrid):
    """
    Latitudes θ_j = (j+½)π/m medidas desde el eje x_{n+1}.

    Cada nodo representa la órbita S^{n-1} de normales con igual θ; el
    representante vive en el meridiano (sinθ, 0, …, 0, cosθ). Hessiano diagonal:
    h'' en la dirección meridiana y h' cotθ en las n−1 direcciones de la órbita.
    """

    kind = "axisymmetric"
    diagonal_frame = True

    def __init__(self, n: int, m: int):
        super().__init__(n)
        if n < 2:
            raise DomainError("AxisymmetricGrid requiere n >= 2")
        if m < 4:
            raise DomainError("AxisymmetricGrid requiere m >= 4")
        self.m = int(m)
        self.dtheta = np.pi / self.m
        self.theta = (np.arange(self.m) + 0.5) * self.dtheta
        self._build_operators()

    @property
    def size(self) -> int:
        return self.m

    @property
    def spacing(self) -> float:
        return self.dtheta

    @property
    def cfl_spacing(self) -> float:
        return self.dtheta

    def _ghost(self, j: int) -> int:
        # reflexión par a través de ambos polos
        if j < 0:
            return -1 - j
        if j >= self.m:
            return 2 * self.m - 1 - j
        return j

    def _build_operators(self) -> None:
        m, d = self.m, self.dtheta
        rows, cols, d1, d2 = [], [], [], []
        for j in range(m):
            for offset, w1, w2 in ((-1, -0.5 / d, 1.0 / d ** 2), (0, 0.0, -2.0 / d ** 2), (1, 0.5 / d, 1.0 / d ** 2)):
                rows.append(j)
                cols.append(self._ghost(j + offset))
                d1.append(w1)
                d2.append(w2)
        first = sp.csr_matrix((d1, (rows, cols)), shape=(m, m))
        second = sp.csr_matrix((d2, (rows, cols)), shape=(m, m))
        cot = sp.diags(1.0 / np.tan(self.theta))
        tangential = (cot @ first).tocsr()
        self._hessian_ops = {(0, 0): second}
        for a in range(1, self.n):
            self._hessian_ops[(a, a)] = tangential
        self._gradient_ops = [first] + [None] * (self.n - 1)

    def normals(self) -> np.ndarray:
        nu = np.zeros((self.m, self.n + 1))
        nu[:, 0] = np.sin(self.theta)
        nu[:, -1] = np.cos(self.theta)
        return nu

    def frames(self) -> np.ndarray:
        fr = np.zeros((self.m, self.n, self.n + 1))
        fr[:, 0, 0] = np.cos(self.theta)
        fr[:, 0, -1] = -np.sin(self.theta)
        for a in range(1, self.n):
            fr[:, a, a] = 1.0
        return fr

    def weights(self) -> np.ndarray:
        raw = np.sin(self.theta) ** (self.n - 1) * self.dtheta
        return raw * (sphere_area(self.n) / raw.sum())

    def antipodes(self) -> np.ndarray:
        return np.arange(self.m)[::-1].copy()

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "m": self.m}

    def check_translation(self, offset: np.ndarray) -> np.ndarray:
        offset = super().check_translation(offset)
        if np.any(offset[:-1] != 0.0):
            raise DomainError("en una malla axisimétrica sólo se admiten traslaciones a lo largo del eje")
        return offset

    def steiner_offset(self, h: np.ndarray) -> np.ndarray:
        w = self.weights()
        c = np.cos(self.theta)
        out = np.zeros(self.n + 1)
        out[-1] = float(np.sum(w * h * c) / np.sum(w * c * c))
        return out


# ========================================
# MALLA LATITUD-LONGITUD (n = 2)
# ========================================

class LatLongGrid(SphereGrid):
    """Malla equiangular θ_j = (j+½)π/m_θ, φ_l = 2πl/m_φ sobre S²."""

    kind = "latlong"

    def __init__(self, m_theta: int, m_phi: int):
        super().__init__(2)
        if m_theta < 4 or m_phi < 4 or m_phi % 2:
            raise DomainError("LatLongGrid requiere m_theta >= 4 y m_phi par >= 4")
        self.m_theta = int(m_theta)
        self.m_phi = int(m_phi)
        self.dtheta = np.pi / self.m_theta
        self.dphi = 2.0 * np.pi / self.m_phi
        theta = (np.arange(self.m_theta) + 0.5) * self.dtheta
        phi = np.arange(self.m_phi) * self.dphi
        self.theta = np.repeat(theta, self.m_phi)
        self.phi = np.tile(phi, self.m_theta)
        self._build_operators()

    @property
    def size(self) -> int:
        return self.m_theta * self.m_phi

    @property
    def spacing(self) -> float:
        return self.dtheta

    @property
    def cfl_spacing(self) -> float:
        return float(min(self.dtheta, np.sin(0.5 * self.dtheta) * self.dphi))

    def _index(self, j: int, l: int) -> int:
        if j < 0:
            j, l = -1 - j, l + self.m_phi // 2
        elif j >= self.m_theta:
            j, l = 2 * self.m_theta - 1 - j, l + self.m_phi // 2
        return j * self.m_phi + (l % self.m_phi)

    def _stencil(self, entries) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for j in range(self.m_theta):
            for l in range(self.m_phi):
                row = j * self.m_phi + l
                for dj, dl, w in entries:
                    rows.append(row)
                    cols.append(self._index(j + dj, l + dl))
                    vals.append(w)
        # coo -> csr suma las entradas repetidas
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.size, self.size)).tocsr()

    def _build_operators(self) -> None:
        dt, dp = self.dtheta, self.dphi
        d_t = self._stencil([(1, 0, 0.5 / dt), (-1, 0, -0.5 / dt)])
        d_tt = self._stencil([(1, 0, 1 / dt ** 2), (0, 0, -2 / dt ** 2), (-1, 0, 1 / dt ** 2)])
        d_p = self._stencil([(0, 1, 0.5 / dp), (0, -1, -0.5 / dp)])
        d_pp = self._stencil([(0, 1, 1 / dp ** 2), (0, 0, -2 / dp ** 2), (0, -1, 1 / dp ** 2)])
        w = 0.25 / (dt * dp)
        d_tp = self._stencil([(1, 1, w), (1, -1, -w), (-1, 1, -w), (-1, -1, w)])

        sin = np.sin(self.theta)
        cot = np.cos(self.theta) / sin
        inv_sin = sp.diags(1.0 / sin)
        self._hessian_ops = {
            (0, 0): d_tt,
            (0, 1): (inv_sin @ (d_tp - sp.diags(cot) @ d_p)).tocsr(),
            (1, 1): (sp.diags(1.0 / sin ** 2) @ d_pp + sp.diags(cot) @ d_t).tocsr(),
        }
        self._gradient_ops = [d_t, (inv_sin @ d_p).tocsr()]

    def normals(self) -> np.ndarray:
        st, ct = np.sin(self.theta), np.cos(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), ct], axis=1)

    def frames(self) -> np.ndarray:
        st, ct = np.sin(self.theta), np.cos(self.theta)
        cp, sn = np.cos(self.phi), np.sin(self.phi)
        e_theta = np.stack([ct * cp, ct * sn, -st], axis=1)
        e_phi = np.stack([-sn, cp, np.zeros_like(cp)], axis=1)
        return np.stack([e_theta, e_phi], axis=1)

    def weights(self) -> np.ndarray:
        raw = np.sin(self.theta) * self.dtheta * self.dphi
        return raw * (4.0 * np.pi / raw.sum())

    def antipodes(self) -> np.ndarray:
        j = np.repeat(np.arange(self.m_theta), self.m_phi)
        l = np.tile(np.arange(self.m_phi), self.m_theta)
        return (self.m_theta - 1 - j) * self.m_phi + (l + self.m_phi // 2) % self.m_phi

    def describe(self) -> dict:
        return {"kind": self.kind, "n": 2, "m_theta": self.m_theta, "m_phi": self.m_phi}

    def steiner_offset(self, h: np.ndarray) -> np.ndarray:
        w = self.weights()
        nu = self.normals()
        moment = np.einsum("i,ij,ik->jk", w, nu, nu)
        return np.linalg.solve(moment, np.einsum("i,i,ij->j", w, h, nu))


# ========================================
# FÁBRICA
# ========================================

def grid_from_description(description: dict) -> SphereGrid:
    """Reconstruye una malla a partir de describe()."""
    kind = description.get("kind")
    if kind == AxisymmetricGrid.kind:
        return AxisymmetricGrid(int(description["n"]), int(description["m"]))
    if kind == LatLongGrid.kind:
        return LatLongGrid(int(description["m_theta"]), int(description["m_phi"]))
    raise DomainError(f"tipo de malla desconocido: {kind!r}")
