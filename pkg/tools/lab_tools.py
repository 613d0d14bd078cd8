# tools/lab_tools.py
"""
Herramientas del laboratorio Q_k expuestas como @tool de langchain-core.
Cada herramienta devuelve un diccionario; los errores del laboratorio se
devuelven como {"error": ...} y nunca se propagan al llamador.
"""

from typing import List, Optional

import numpy as np
from langchain_core.tools import tool

from .schemas import (
    QkInput, EsferaInput, CurvaturasSoporteInput, StarInput,
    LeyInterfazInput, DistanciaInput, CoeficientesInput
)
from .help_tools import guia_del_laboratorio
from audit.linearization import linearized_coefficients
from flatside.charts import model_jet
from flatside.holder import SingularMetricPoint, hyperbolic_distance
from flatside.pressure import check_star, lens_profile, predicted_interface_slope
from flows.flowcore import mean_curvature_constant, sphere_extinction_time, sphere_radius
from geometry.convexgeom import ellipsoid, lens, sphere, support_curvatures
from geometry.errors import DomainError, QkLabError
from geometry.spheregrid import AxisymmetricGrid
from geometry.symfun import dieter_lower_bound, positivity_identity_check, qk_gradient

# Importar logger
try:
    from utils.logger import get_logger
    logger = get_logger('tools')
except ImportError:
    import logging
    logger = logging.getLogger('tools')

# ========================================
# ÁLGEBRA SIMÉTRICA
# ========================================

@tool("calcular_qk", args_schema=QkInput)
def _calcular_qk(curvaturas: List[float], k: int) -> dict:
    """Calcula Q_k = S_k/S_{k-1}, su gradiente y las desigualdades de positividad."""
    logger.info(f"🔧 Calculando Q_{k} para λ={curvaturas}")

    try:
        jet = qk_gradient(curvaturas, k)
        result = {
            "qk": jet.value,
            "gradiente": jet.gradient.tolist(),
            "defecto_euler": jet.euler_defect(curvaturas),
        }
        if min(curvaturas) > 0:
            lhs, rhs = positivity_identity_check(curvaturas, k)
            bound = dieter_lower_bound(curvaturas, k)
            result["identidad_positividad"] = {"lhs": lhs, "rhs": rhs, "cumple": lhs >= rhs - 1e-12 * max(1.0, rhs)}
            result["cota_inferior_gradiente"] = bound.tolist()
        logger.info(f"✅ Q_{k} = {jet.value:.10g}")
        return result

    except QkLabError as e:
        logger.error(f"❌ Error en Q_k: {type(e).__name__} - {e}")
        return {"error": str(e), "tipo": e.kind}
    except Exception as e:
        logger.error(f"❌ Error inesperado en Q_k: {type(e).__name__} - {e}")
        return {"error": f"Error calculando Q_k: {type(e).__name__}"}

# ========================================
# FLUJO
# ========================================

@tool("tiempo_extincion_esfera", args_schema=EsferaInput)
def _tiempo_extincion_esfera(n: int, k: int, radio: float = 1.0, t: Optional[float] = None) -> dict:
    """Ley cerrada de la esfera: R(t)² = R₀² − 2(n−k+1)t/k y tiempo de extinción."""
    logger.info(f"🔧 Ley de la esfera: n={n}, k={k}, R₀={radio}")

    try:
        if not 1 <= k <= n:
            raise DomainError(f"k={k} fuera de [1, {n}]")
        result = {
            "tiempo_extincion": sphere_extinction_time(n, k, radio),
            "qk_esfera_unidad": n / mean_curvature_constant(n, k),
            "constante_H_sobre_Qk": mean_curvature_constant(n, k),
        }
        if t is not None:
            result["radio_en_t"] = sphere_radius(n, k, radio, t)
        logger.info(f"✅ Extinción en T={result['tiempo_extincion']:.6g}")
        return result

    except QkLabError as e:
        logger.error(f"❌ Error en ley de la esfera: {e}")
        return {"error": str(e), "tipo": e.kind}


@tool("curvaturas_soporte", args_schema=CurvaturasSoporteInput)
def _curvaturas_soporte(cuerpo: str, n: int = 2, radio: float = 1.0, radio_plano: float = 0.5,
                        semiejes: Optional[List[float]] = None, resolucion: int = 32,
                        latitud: float = 0.7) -> dict:
    """Curvaturas principales de un cuerpo estándar en la latitud pedida, leídas de ∇²h + h."""
    logger.info(f"🔧 Curvaturas de {cuerpo} (n={n}) en θ={latitud}")

    try:
        grid = AxisymmetricGrid(n, resolucion)
        if cuerpo == "sphere":
            surface = sphere(grid, radio)
        elif cuerpo == "ellipsoid":
            axes = semiejes or [radio] * n + [1.5 * radio]
            surface = ellipsoid(grid, axes)
        else:
            surface = lens(grid, radio, radio_plano)
        node = int(np.argmin(np.abs(grid.theta - latitud)))
        curvatures = support_curvatures(surface, node)
        logger.info(f"✅ λ={curvatures.values}")
        return {
            "theta_nodo": float(grid.theta[node]),
            "curvaturas": curvatures.values.tolist(),
            "radios": (1.0 / curvatures.values).tolist(),
        }

    except QkLabError as e:
        logger.error(f"❌ Error en curvaturas: {e}")
        return {"error": str(e), "tipo": e.kind}

# ========================================
# LADO PLANO
# ========================================

@tool("verificar_condicion_star", args_schema=StarInput)
def _verificar_condicion_star(n: int, k: int, radio: float = 1.0, radio_plano: float = 1.0,
                              lam: float = 0.1, nodos: int = 200) -> dict:
    """Certifica la condición (★) en la interfaz de una lente con lado plano."""
    logger.info(f"🔧 Condición (★): R={radio}, ρ₀={radio_plano}, λ={lam}")

    try:
        report = check_star(lens_profile(n, k, radio, radio_plano, nodes=nodos), lam)
        logger.info(f"✅ λ*={report.lambda_star}")
        return {
            "certificada": report.certified,
            "lambda_star": report.lambda_star,
            "min_gradiente": report.min_grad,
            "min_hessiano": report.min_hess_eig,
            "pendiente_esperada": 1.0 / np.sqrt(2.0 * radio),
        }

    except QkLabError as e:
        logger.error(f"❌ Error en (★): {e}")
        return {"error": str(e), "tipo": e.kind}


@tool("ley_interfaz", args_schema=LeyInterfazInput)
def _ley_interfaz(n: int, k: int, radio_plano: Optional[float] = None) -> dict:
    """Pendiente predicha de ρ² frente a t: la interfaz se mueve por el flujo Q_{k−1}."""
    logger.info(f"🔧 Ley de la interfaz: n={n}, k={k}")

    try:
        slope = predicted_interface_slope(n, k)
        result = {"pendiente_rho2": slope, "constante_velocidad": -slope / 2.0}
        if radio_plano is not None:
            result["tiempo_cierre"] = radio_plano ** 2 / abs(slope)
        logger.info(f"✅ d(ρ²)/dt = {slope:.6g}")
        return result

    except QkLabError as e:
        logger.error(f"❌ Error en ley de la interfaz: {e}")
        return {"error": str(e), "tipo": e.kind}


@tool("distancia_hiperbolica", args_schema=DistanciaInput)
def _distancia_hiperbolica(z1: float, z2: float, x1: List[float] = (), x2: List[float] = (),
                           t1: Optional[float] = None, t2: Optional[float] = None) -> dict:
    """Distancia s̄ en la métrica singular dz²/z² + |dx̄|² (más √|Δt| si hay tiempos)."""
    logger.info(f"🔧 Distancia s̄ entre z={z1} y z={z2}")

    try:
        d = hyperbolic_distance(SingularMetricPoint(z1, tuple(x1), t1), SingularMetricPoint(z2, tuple(x2), t2))
        logger.info(f"✅ s̄ = {d:.10g}")
        return {"distancia": d, "parabolica": t1 is not None and t2 is not None}

    except QkLabError as e:
        logger.error(f"❌ Error en distancia: {e}")
        return {"error": str(e), "tipo": e.kind}


@tool("auditar_coeficientes", args_schema=CoeficientesInput)
def _auditar_coeficientes(n: int = 3, k: int = 2, z: float = 1e-4, a: float = 2.0,
                          c: List[float] = (1.0, 1.5), metodo: str = "minors") -> dict:
    """Coeficientes de la ecuación linealizada en el jet modelo f = a√z − Σc_i x_i²/2."""
    logger.info(f"🔧 Coeficientes linealizados: n={n}, k={k}, z={z}, método={metodo}")

    try:
        jet = model_jet(z, np.zeros(n - 1), 0.0, a, list(c))
        coeffs = linearized_coefficients(jet, k, metodo)
        logger.info(f"✅ a₁₁={coeffs.a[0, 0]:.6g}")
        return {
            "a": coeffs.a.tolist(),
            "b": coeffs.b.tolist(),
            "c": coeffs.c,
            "a11_sobre_z2": float(coeffs.a[0, 0] / z ** 2),
            "elipticidad_minima": coeffs.min_ellipticity,
            "autovalores": coeffs.eigenvalues.tolist(),
        }

    except QkLabError as e:
        logger.error(f"❌ Error en auditoría: {e}")
        return {"error": str(e), "tipo": e.kind}


lab_tool_list = [
    _calcular_qk,
    _tiempo_extincion_esfera,
    _curvaturas_soporte,
    _verificar_condicion_star,
    _ley_interfaz,
    _distancia_hiperbolica,
    _auditar_coeficientes,
    guia_del_laboratorio,
]
