# tools/help_tools.py
from typing import Optional

from langchain_core.tools import tool

from .schemas import GuiaInput

# Secciones de la guía, en el orden en que se muestran
SECCIONES_DE_LA_GUIA = {
    "algebra": """**Álgebra simétrica:**
* **Q_k:** "Calcula Q_2 para las curvaturas [1, 2, 3] y su gradiente."
* **Positividad:** "¿Se cumple la identidad de positividad para λ = [0.5, 1, 4] con k = 3?\"""",
    "flujo": """**Flujo de hipersuperficies convexas:**
* **Esfera:** "¿Cuándo se extingue una esfera S^3 de radio 1 bajo el flujo Q_2?"
* **Curvaturas:** "Curvaturas de la lente R=1, ρ₀=0.5 en la colatitud 0.7.\"""",
    "lado_plano": """**Lados planos:**
* **(★):** "¿La lente R=1, ρ₀=1 satisface (★) con λ=0.2 para n=2, k=2?"
* **Interfaz:** "Pendiente de ρ² para n=3, k=2 y tiempo de cierre con ρ₀=1."
* **Métrica singular:** "Distancia s̄ entre z=1e-4 y z=1e-2 con x̄=[0.1] y x̄=[0]."
* **Linealización:** "Coeficientes a_ij en z=1e-4 para n=3, k=2 con el método de menores.\"""",
    "cli": """**Escenarios completos (CLI):**
* `python lab_cli.py run --config scenarios/shrink_sphere.yaml --out runs/esfera`
* `python lab_cli.py verify --out runs/esfera`
* `python lab_cli.py emit-plotdata --out runs/esfera`""",
}


@tool("guia_del_laboratorio", args_schema=GuiaInput)
def guia_del_laboratorio(tema: Optional[str] = None) -> str:
    """
    Ejemplos de consultas del laboratorio Q_k, completos o de un tema
    ('algebra', 'flujo', 'lado_plano', 'cli'). Útil cuando no está claro
    qué herramienta corresponde a una pregunta.
    """
    if tema is None:
        return "\n\n".join(SECCIONES_DE_LA_GUIA.values())
    seccion = SECCIONES_DE_LA_GUIA.get(tema.strip().lower())
    if seccion is None:
        return f"Tema desconocido {tema!r}. Temas: {', '.join(SECCIONES_DE_LA_GUIA)}"
    return seccion
