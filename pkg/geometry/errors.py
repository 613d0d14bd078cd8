# geometry/errors.py
"""
Jerarquía de excepciones del laboratorio.
Los núcleos numéricos lanzan estas excepciones; la capa de tools las
convierte en diccionarios {"error": ...} y el CLI en códigos de salida.
"""

from typing import Optional, Sequence


class QkLabError(Exception):
    """Base de todos los errores del laboratorio."""

    kind = "error"


# ========================================
# ERRORES DE DOMINIO / ÁLGEBRA
# ========================================

class DomainError(QkLabError, ValueError):
    """Argumento fuera del dominio (k fuera de rango, z <= 0, ...)."""

    kind = "domain"


class DegenerateDenominatorError(QkLabError, ArithmeticError):
    """S_{k-1}(λ) por debajo de la tolerancia de degeneración."""

    kind = "degenerate_denominator"

    def __init__(self, lam: Sequence[float], k: int, denominator: float):
        self.lam = [float(x) for x in lam]
        self.k = k
        self.denominator = float(denominator)
        super().__init__(
            f"S_{k - 1}(λ) = {self.denominator:.3e} degenerado para λ={self.lam}"
        )


class RepeatedEigenvalueError(QkLabError, ArithmeticError):
    """Autovalores repetidos: la fórmula de menores no está definida."""

    kind = "repeated_eigenvalue"


class OutOfScopeError(QkLabError):
    kind = "out_of_scope"


# ========================================
# ERRORES GEOMÉTRICOS
# ========================================

class ConvexityLossError(QkLabError):
    """Algún radio principal <= 0: el paso se rechaza."""

    kind = "convexity_loss"

    def __init__(self, node: int, radius: float, t: Optional[float] = None):
        self.node = int(node)
        self.radius = float(radius)
        self.t = t
        where = f" en t={t:.6g}" if t is not None else ""
        super().__init__(f"Pérdida de convexidad en el nodo {self.node} (r={self.radius:.3e}){where}")


class CFLViolationError(QkLabError):
    kind = "cfl_violation"

    def __init__(self, max_displacement: float, limit: float, suggested_dt: float):
        self.max_displacement = float(max_displacement)
        self.limit = float(limit)
        self.suggested_dt = float(suggested_dt)
        super().__init__(
            f"Desplazamiento nodal {self.max_displacement:.3e} > {self.limit:.3e}; "
            f"usar dt <= {self.suggested_dt:.3e}"
        )


class OriginNotInteriorError(QkLabError):
    kind = "origin_not_interior"


class GridMismatchError(QkLabError):
    kind = "grid_mismatch"


class ExtinctionUnavailableError(QkLabError):
    kind = "extinction_unavailable"


class ApproximationError(QkLabError):
    kind = "approximation"


# ========================================
# ERRORES DE LADO PLANO
# ========================================

class ResolutionError(QkLabError):
    kind = "resolution"


class StarConditionError(QkLabError):
    """Alarma de degeneración: la condición (★) cayó por debajo de λ/2."""

    kind = "star_condition"

    def __init__(self, message: str, report=None, t: Optional[float] = None):
        self.report = report
        self.t = t
        super().__init__(message)


class InversionError(QkLabError):
    kind = "inversion"


class DegenerateChartError(QkLabError):
    kind = "degenerate_chart"


# ========================================
# ERRORES DE CONFIGURACIÓN / ARTEFACTOS
# ========================================

class ConfigError(QkLabError):
    kind = "config"


class CorruptArtifactError(QkLabError):
    kind = "corrupt_artifact"
