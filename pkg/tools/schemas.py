# tools/schemas.py
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator
from typing import Annotated, List, Literal, Optional, Union

from flows.flowcore import FlowConfig

# --- Schemas Pydantic de las herramientas ---

class QkInput(BaseModel):
    """Schema para evaluar Q_k = S_k/S_{k-1} y su gradiente."""
    curvaturas: List[float] = Field(description="Vector de curvaturas principales λ (ej. [1.0, 2.0, 3.0])", min_length=1)
    k: int = Field(description="Orden del cociente (1 <= k <= n)", ge=1)

class EsferaInput(BaseModel):
    """Schema para la ley cerrada de la esfera que colapsa."""
    n: int = Field(description="Dimensión de la hipersuperficie S^n", ge=1)
    k: int = Field(description="Orden del cociente", ge=1)
    radio: float = Field(default=1.0, description="Radio inicial R₀", gt=0)
    t: Optional[float] = Field(default=None, description="Tiempo en el que evaluar R(t)", ge=0)

class CurvaturasSoporteInput(BaseModel):
    """Schema para las curvaturas de un cuerpo estándar leídas de su función soporte."""
    cuerpo: Literal["sphere", "ellipsoid", "lens"] = Field(description="Cuerpo: sphere, ellipsoid o lens")
    n: int = Field(default=2, description="Dimensión de la hipersuperficie", ge=2)
    radio: float = Field(default=1.0, description="Radio de la esfera o de la bola de la lente", gt=0)
    radio_plano: float = Field(default=0.5, description="Radio del lado plano de la lente", ge=0)
    semiejes: Optional[List[float]] = Field(default=None, description="Semiejes del elipsoide (n+1 valores, los n primeros iguales)")
    resolucion: int = Field(default=32, description="Latitudes de la malla axisimétrica", ge=4)
    latitud: float = Field(default=0.7, description="Colatitud θ ∈ (0, π) del nodo consultado", gt=0, lt=3.2)

class StarInput(BaseModel):
    """Schema para certificar la condición de no degeneración (★) en una lente."""
    n: int = Field(description="Dimensión de la hipersuperficie", ge=2)
    k: int = Field(description="Orden del cociente", ge=2)
    radio: float = Field(default=1.0, description="Radio R de la bola", gt=0)
    radio_plano: float = Field(default=1.0, description="Radio ρ₀ del lado plano", gt=0)
    lam: float = Field(default=0.1, description="Constante λ a certificar", gt=0)
    nodos: int = Field(default=200, description="Nodos radiales", ge=20)

class LeyInterfazInput(BaseModel):
    """Schema para la pendiente predicha de ρ² frente a t."""
    n: int = Field(description="Dimensión de la hipersuperficie", ge=2)
    k: int = Field(description="Orden del cociente (k >= 2)", ge=1)
    radio_plano: Optional[float] = Field(default=None, description="ρ₀ para estimar el tiempo de cierre", gt=0)

class DistanciaInput(BaseModel):
    """Schema para la distancia en la métrica singular dz²/z² + |dx̄|²."""
    z1: float = Field(description="Coordenada z del primer punto", gt=0)
    z2: float = Field(description="Coordenada z del segundo punto", gt=0)
    x1: List[float] = Field(default_factory=list, description="Coordenadas tangenciales x̄ del primer punto")
    x2: List[float] = Field(default_factory=list, description="Coordenadas tangenciales x̄ del segundo punto")
    t1: Optional[float] = Field(default=None, description="Tiempo del primer punto (variante parabólica)")
    t2: Optional[float] = Field(default=None, description="Tiempo del segundo punto (variante parabólica)")

class CoeficientesInput(BaseModel):
    """Schema para auditar los coeficientes linealizados sobre el jet modelo."""
    n: int = Field(default=3, description="Dimensión (jet en z y n−1 variables tangenciales)", ge=2)
    k: int = Field(default=2, description="Orden del cociente", ge=1)
    z: float = Field(default=1e-4, description="Altura z del punto", gt=0)
    a: float = Field(default=2.0, description="Coeficiente de √z en el jet modelo", gt=0)
    c: List[float] = Field(default_factory=lambda: [1.0, 1.5], description="Curvaturas tangenciales c_i (n−1 valores)")
    metodo: Literal["minors", "finite-difference"] = Field(default="minors", description="Método de derivación")

class GuiaInput(BaseModel):
    """Schema para pedir la guía de consultas, completa o de un tema."""
    tema: Optional[str] = Field(default=None, description="algebra, flujo, lado_plano o cli; vacío para la guía completa")

# ========================================
# ESCENARIOS (archivos YAML)
# ========================================

class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FlowParams(_Params):
    """Parámetros comunes de las corridas del flujo."""
    n: int = Field(default=2, ge=2)
    k: int = Field(default=1, ge=1)
    resolution: int = Field(default=64, ge=4)
    dt: float = Field(default=1e-4, gt=0)
    t_end: Optional[float] = Field(default=None, gt=0)
    grid: Literal["axisymmetric", "latlong"] = "axisymmetric"
    scheme: Literal["explicit", "semi-implicit"] = "explicit"
    adaptive: bool = True
    monitor_tolerance: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def _check_orders(self):
        if self.k > self.n:
            raise ValueError(f"k={self.k} debe cumplir k <= n={self.n}")
        return self

    def flow_config(self, t_end: float, **extra) -> FlowConfig:
        data = self.model_dump(include={"n", "k", "resolution", "dt", "grid", "scheme",
                                        "adaptive", "monitor_tolerance"})
        data.update(extra)
        return FlowConfig(t_end=t_end, **data)


class ShrinkSphereParams(FlowParams):
    radius: float = Field(default=1.0, gt=0)


class ShrinkEllipsoidParams(FlowParams):
    semi_axes: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.5])
    comparison_pairs: int = Field(default=0, ge=0, description="Pares anidados aleatorios para el principio de comparación")

    @model_validator(mode="after")
    def _check_axes(self):
        if len(self.semi_axes) != self.n + 1 or min(self.semi_axes) <= 0:
            raise ValueError(f"se esperaban {self.n + 1} semiejes positivos")
        return self


class ViscosityParams(FlowParams):
    radius: float = Field(default=1.0, gt=0)
    flat_radius: float = Field(default=0.5, ge=0)
    epsilons: List[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125], min_length=3)
    probe_times: List[float] = Field(default_factory=lambda: [0.05, 0.1])
    with_extinction: bool = False


class DilationParams(FlowParams):
    semi_axes: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.5])
    deltas: List[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025], min_length=2)
    probe_times: List[float] = Field(default_factory=lambda: [0.05, 0.1])
    refinements: List[int] = Field(default_factory=list, description="Resoluciones para el estudio de refinamiento con el primer δ")


class FlatSideLensParams(_Params):
    n: int = Field(default=2, ge=2)
    k: int = Field(default=2, ge=2)
    radius: float = Field(default=1.0, gt=0)
    flat_radius: float = Field(default=1.0, gt=0)
    nodes: int = Field(default=200, ge=20)
    reach: float = Field(default=0.7, gt=0, lt=1)
    t_end: Optional[float] = Field(default=None, gt=0)
    dt: Optional[float] = Field(default=None, gt=0)
    cfl: float = Field(default=0.4, gt=0, le=1)
    lam: Optional[float] = Field(default=None, gt=0)
    fit_window: float = Field(default=0.25, gt=0, le=1)
    max_steps: int = Field(default=1_000_000, ge=1)

    @model_validator(mode="after")
    def _check_orders(self):
        if self.k > self.n:
            raise ValueError(f"k={self.k} debe cumplir k <= n={self.n}")
        return self


class LinearizationAuditParams(_Params):
    n: int = Field(default=3, ge=2)
    k: int = Field(default=2, ge=1)
    a: float = Field(default=2.0, gt=0)
    c: List[float] = Field(default_factory=lambda: [1.0, 1.5])
    z_max: float = Field(default=0.1, gt=0)
    z_min: float = Field(default=1e-6, gt=0)
    ratio: float = Field(default=0.8, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_dims(self):
        if len(self.c) != self.n - 1:
            raise ValueError(f"c necesita n−1 = {self.n - 1} valores")
        if self.k > self.n:
            raise ValueError(f"k={self.k} debe cumplir k <= n={self.n}")
        if self.z_min >= self.z_max:
            raise ValueError("z_min debe ser menor que z_max")
        return self


class HolderNormsParams(_Params):
    function: Literal["sqrt_z", "lens"] = "sqrt_z"
    alpha: float = Field(default=0.5, gt=0, lt=1)
    z_max: float = Field(default=1.0, gt=0)
    z_min: float = Field(default=1e-6, gt=0)
    ratio: float = Field(default=0.8, gt=0, lt=1)
    x_points: int = Field(default=5, ge=1)
    x_extent: float = Field(default=0.2, ge=0)
    n: int = Field(default=2, ge=2)
    k: int = Field(default=2, ge=2)
    radius: float = Field(default=1.0, gt=0)
    flat_radius: float = Field(default=1.0, gt=0)


class _ScenarioBase(BaseModel):
    model_config = ConfigDict(extra="forbid")
    seed: int = Field(default=0, ge=0)
    output_dir: Optional[str] = None


class ShrinkSphereScenario(_ScenarioBase):
    name: Literal["shrink_sphere"]
    params: ShrinkSphereParams = Field(default_factory=ShrinkSphereParams)


class ShrinkEllipsoidScenario(_ScenarioBase):
    name: Literal["shrink_ellipsoid"]
    params: ShrinkEllipsoidParams = Field(default_factory=ShrinkEllipsoidParams)


class ViscosityScenario(_ScenarioBase):
    name: Literal["viscosity_convergence"]
    params: ViscosityParams = Field(default_factory=ViscosityParams)


class DilationScenario(_ScenarioBase):
    name: Literal["dilation_uniqueness"]
    params: DilationParams = Field(default_factory=DilationParams)


class FlatSideLensScenario(_ScenarioBase):
    name: Literal["flat_side_lens"]
    params: FlatSideLensParams = Field(default_factory=FlatSideLensParams)


class LinearizationAuditScenario(_ScenarioBase):
    name: Literal["linearization_audit"]
    params: LinearizationAuditParams = Field(default_factory=LinearizationAuditParams)


class HolderNormsScenario(_ScenarioBase):
    name: Literal["holder_norms"]
    params: HolderNormsParams = Field(default_factory=HolderNormsParams)


Scenario = Annotated[
    Union[
        ShrinkSphereScenario, ShrinkEllipsoidScenario, ViscosityScenario, DilationScenario,
        FlatSideLensScenario, LinearizationAuditScenario, HolderNormsScenario,
    ],
    Field(discriminator="name"),
]

SCENARIO_ADAPTER = TypeAdapter(Scenario)

SCENARIO_NAMES = (
    "shrink_sphere", "shrink_ellipsoid", "viscosity_convergence", "dilation_uniqueness",
    "flat_side_lens", "linearization_audit", "holder_norms",
)
