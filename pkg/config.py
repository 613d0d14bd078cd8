# config.py
"""
Configuración general del laboratorio de flujos Q_k.
Rutas, variables de entorno (.env) y tolerancias numéricas por defecto.
"""

import os
from pathlib import Path

# ========================================
# PATHS DEL PROYECTO
# ========================================

BASE_DIR = Path(__file__).resolve().parent
SCENARIOS_DIR = BASE_DIR / "scenarios"
DEFAULT_OUTPUT_DIR = BASE_DIR / "runs"

# ========================================
# VARIABLES DE ENTORNO
# ========================================

def load_environment() -> bool:
    """Carga el archivo .env del proyecto si existe. Devuelve True si se cargó."""
    try:
        from dotenv import load_dotenv
    except ImportError:
        print("⚠️ python-dotenv no instalado.")
        return False

    dotenv_path = BASE_DIR / '.env'
    if dotenv_path.exists():
        load_dotenv(dotenv_path=dotenv_path)
        return True
    load_dotenv()
    return False


_ENV_LOADED = load_environment()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        print(f"⚠️ {name}={raw!r} no es un entero; usando {default}.")
        return default
    return max(1, value)


# Hilos para evolucionar miembros de una familia en paralelo
THREADS = _env_int("QKLAB_THREADS", 1)

ENABLE_FILE_LOGGING = os.getenv("QKLAB_FILE_LOGGING", "true").lower() == "true"
LOGS_DIR = Path(os.getenv("QKLAB_LOGS_DIR", str(BASE_DIR / "logs")))
LOG_LEVEL = os.getenv("QKLAB_LOG_LEVEL", "INFO")

TOOL_VERSION = "1.0.0"

# ========================================
# TOLERANCIAS: ÁLGEBRA SIMÉTRICA
# ========================================

DEGENERATE_TOL = 1e-14          # S_{k-1} <= tol * max(1, S_{k-1}(|λ|))
RADII_FORM_SWITCH = 1e-6        # min λ < switch * max λ -> velocidad en radios

# ========================================
# TOLERANCIAS: FLUJO
# ========================================

MONITOR_TOL = 1e-6              # relativa, por paso, para 𝓕_min y max H/𝓕
RECENTER_EVERY = 50
EXTINCTION_FACTOR = 2.0         # ρ < factor * espaciado -> EXTINCT
CFL_SAFETY = 0.5                # desplazamiento nodal máximo / (espaciado * escala)
CFL_DIFFUSION = 0.4             # dt <= CFL_DIFFUSION * Δ² / (2 max Σ D_p)
EXTINCTION_FIT_FRACTION = 0.1   # "última década" de pasos para el ajuste

# ========================================
# TOLERANCIAS: VISCOSIDAD
# ========================================

CAUCHY_RATIO = 0.6

# ========================================
# TOLERANCIAS: LADO PLANO / AUDITORÍA
# ========================================

Z_RATIO = 0.8
Z_FLOOR = 1e-6
HOLDER_EXACT_POINTS = 5_000
HOLDER_PAIR_SAMPLES = 1_000_000
HOLDER_SEED = 20240101
REPEATED_EIG_TOL = 1e-8
FD_REL_STEP = 1e-6
ASYMPTOTIC_Z_MAX = 1e-4         # ventana de ajuste de pendientes asintóticas
INTERFACE_FIT_NODES = 4         # nodos resueltos para extrapolar la velocidad de Γ

# ========================================
# HEALTH CHECK
# ========================================

def check_system_health() -> dict:
    """
    Verifica que la pila numérica esté instalada.

    Returns:
        Diccionario con el estado de cada componente
    """
    health = {}
    for module_name in ("numpy", "scipy", "pydantic", "ruamel.yaml", "langchain_core"):
        try:
            module = __import__(module_name, fromlist=["__version__"])
            version = getattr(module, "__version__", "desconocida")
            health[module_name] = {"status": True, "details": f"v{version}"}
        except ImportError as e:
            health[module_name] = {"status": False, "details": str(e)}
    health["threads"] = {"status": True, "details": str(THREADS)}
    health["env_file"] = {"status": _ENV_LOADED, "details": str(BASE_DIR / '.env')}
    return health
