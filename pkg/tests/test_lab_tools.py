"""
Tests unitarios para las herramientas del laboratorio.
Valida los valores cerrados y que los errores se devuelvan como diccionario.
"""

import math

import pytest
from tools.lab_tools import (
    _auditar_coeficientes, _calcular_qk, _curvaturas_soporte, _distancia_hiperbolica,
    _ley_interfaz, _tiempo_extincion_esfera, _verificar_condicion_star, lab_tool_list,
)


# ========================================
# TESTS Q_k
# ========================================

def test_qk_valor_y_gradiente():
    """Test Q_2(1, 2, 3) = 11/6 y ∂₁Q_2 = 19/36"""
    result = _calcular_qk.invoke({"curvaturas": [1.0, 2.0, 3.0], "k": 2})

    assert result["qk"] == pytest.approx(11.0 / 6.0)
    assert result["gradiente"][0] == pytest.approx(19.0 / 36.0)
    assert result["defecto_euler"] < 1e-12
    assert result["identidad_positividad"]["cumple"]
    assert len(result["cota_inferior_gradiente"]) == 3


def test_qk_denominador_degenerado():
    """Test S_1 = 0 con curvaturas de signo opuesto"""
    result = _calcular_qk.invoke({"curvaturas": [1.0, -1.0], "k": 2})

    assert "error" in result
    assert result["tipo"] == "degenerate_denominator"


def test_qk_orden_fuera_de_rango():
    result = _calcular_qk.invoke({"curvaturas": [1.0, 2.0], "k": 3})

    assert result["tipo"] == "domain"


def test_qk_sin_identidad_para_curvaturas_no_positivas():
    result = _calcular_qk.invoke({"curvaturas": [2.0, 1.0, 0.0], "k": 2})

    assert "qk" in result
    assert "identidad_positividad" not in result


# ========================================
# TESTS ESFERA
# ========================================

def test_esfera_tiempo_de_extincion():
    """Test S³ bajo Q_2: T = kR²/(2(n−k+1)) = 0.5"""
    result = _tiempo_extincion_esfera.invoke({"n": 3, "k": 2, "radio": 1.0, "t": 0.25})

    assert result["tiempo_extincion"] == pytest.approx(0.5)
    assert result["constante_H_sobre_Qk"] == pytest.approx(3.0)
    assert result["qk_esfera_unidad"] == pytest.approx(1.0)
    assert result["radio_en_t"] == pytest.approx(math.sqrt(0.5))


def test_esfera_k_mayor_que_n():
    result = _tiempo_extincion_esfera.invoke({"n": 2, "k": 3})

    assert "error" in result


def test_curvaturas_de_la_esfera():
    """Test esfera de radio 2: λ = 1/2 en todas las direcciones"""
    result = _curvaturas_soporte.invoke({"cuerpo": "sphere", "radio": 2.0})

    assert result["curvaturas"] == pytest.approx([0.5, 0.5])
    assert result["radios"] == pytest.approx([2.0, 2.0])


def test_curvaturas_elipsoide_no_axisimetrico():
    result = _curvaturas_soporte.invoke({"cuerpo": "ellipsoid", "semiejes": [1.0, 1.2, 1.5]})

    assert "error" in result


# ========================================
# TESTS LADO PLANO
# ========================================

def test_star_en_la_lente():
    """Test lente R = ρ₀ = 1: λ* = 1/√2"""
    result = _verificar_condicion_star.invoke({"n": 2, "k": 2, "lam": 0.2})

    assert result["certificada"]
    assert result["lambda_star"] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-3)
    assert result["pendiente_esperada"] == pytest.approx(1.0 / math.sqrt(2.0))


def test_ley_de_la_interfaz():
    """Test n = 3, k = 2: d(ρ²)/dt = −4 y cierre en ρ₀²/4"""
    result = _ley_interfaz.invoke({"n": 3, "k": 2, "radio_plano": 1.0})

    assert result["pendiente_rho2"] == pytest.approx(-4.0)
    assert result["constante_velocidad"] == pytest.approx(2.0)
    assert result["tiempo_cierre"] == pytest.approx(0.25)


def test_ley_de_la_interfaz_k_1():
    result = _ley_interfaz.invoke({"n": 3, "k": 1})

    assert result["tipo"] == "out_of_scope"


def test_distancia_hiperbolica():
    result = _distancia_hiperbolica.invoke({"z1": 1e-2, "z2": 1e-4, "x1": [0.0], "x2": [0.0]})

    assert result["distancia"] == pytest.approx(math.log(100.0))
    assert not result["parabolica"]


def test_distancia_dimensiones_distintas():
    result = _distancia_hiperbolica.invoke({"z1": 1e-2, "z2": 1e-4, "x1": [0.0], "x2": [0.0, 1.0]})

    assert "error" in result


def test_auditoria_de_coeficientes():
    """Test jet modelo a = 2, c = (1, 1.5): a₁₁/z² ≈ 19/(1 + 5√z)²"""
    result = _auditar_coeficientes.invoke({})

    assert result["a11_sobre_z2"] == pytest.approx(19.0 / 1.05 ** 2, rel=1e-2)
    assert result["elipticidad_minima"] > 0
    assert result["c"] == 0.0
    assert len(result["a"]) == 3


def test_auditoria_dimensiones_incorrectas():
    result = _auditar_coeficientes.invoke({"n": 3, "c": [1.0]})

    assert "error" in result


# ========================================
# TESTS CATÁLOGO
# ========================================

def test_catalogo_de_herramientas():
    names = [t.name for t in lab_tool_list]

    assert len(names) == len(set(names)) == 8
    assert "guia_del_laboratorio" in names


def test_guia_de_uso():
    guia = lab_tool_list[-1].invoke({})

    assert "lab_cli.py run" in guia
    assert "Álgebra simétrica" in guia


def test_guia_por_tema():
    """Test un tema devuelve sólo su sección y uno desconocido lista los temas"""
    cli = lab_tool_list[-1].invoke({"tema": "CLI"})
    desconocido = lab_tool_list[-1].invoke({"tema": "metricas"})

    assert "lab_cli.py verify" in cli
    assert "Q_k:" not in cli
    assert "Tema desconocido" in desconocido
    assert "lado_plano" in desconocido


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
