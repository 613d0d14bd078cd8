# runner/persistence.py
"""
Artefactos de una corrida: CSV (RFC-4180, 17 cifras), JSON, manifiesto con
hashes sha256 y el lock exclusivo del directorio de salida.
"""

import csv
import hashlib
import io
import json
import math
import os
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError
from pydantic import BaseModel, Field, ValidationError

from config import TOOL_VERSION
from geometry.errors import ConfigError, CorruptArtifactError
from tools.schemas import SCENARIO_ADAPTER

try:
    from utils.logger import get_logger
    logger = get_logger('persistence')
except ImportError:
    import logging
    logger = logging.getLogger('persistence')

MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".lock"

# ========================================
# CONFIGURACIÓN DEL ESCENARIO
# ========================================

def load_scenario(path: Path):
    """
    Lee y valida un escenario YAML.

    Raises:
        ConfigError: archivo ilegible, YAML inválido o esquema no satisfecho
    """
    path = Path(path)
    yaml = YAML(typ="safe")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.load(fh)
    except (OSError, YAMLError) as e:
        raise ConfigError(f"no se pudo leer {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: se esperaba un mapeo en la raíz")
    try:
        return SCENARIO_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e.error_count()} error(es) de validación: {e.errors()[0]['msg']}") from e

# ========================================
# ESCRITURA
# ========================================

def format_real(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "%.17g" % value


def csv_bytes(columns: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_real(v) if isinstance(v, (int, float)) else v for v in row])
    return buffer.getvalue().encode("utf-8")


def json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n").encode("utf-8")


def _json_default(obj):
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, Exception):
        return f"{type(obj).__name__}: {obj}"
    return str(obj)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactWriter:
    """Escribe archivos en el directorio de salida y lleva el inventario para el manifiesto."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.files: Dict[str, str] = {}

    def _write(self, name: str, data: bytes) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        logger.debug(f"Artefacto escrito: {path}")
        return path

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
        return self._write(name, csv_bytes(columns, rows))

    def write_json(self, name: str, payload) -> Path:
        return self._write(name, json_bytes(payload))

    def discard(self) -> List[str]:
        """Borra lo escrito por esta corrida (salida con código 2: sin artefactos)."""
        removed = []
        for name in list(self.files):
            try:
                (self.out_dir / name).unlink()
            except FileNotFoundError:
                pass
            removed.append(name)
        self.files.clear()
        if removed:
            logger.warning(f"⚠️ Artefactos descartados: {', '.join(removed)}")
        return removed

# ========================================
# MANIFIESTO
# ========================================

class RunManifest(BaseModel):
    scenario: dict
    tool_version: str = TOOL_VERSION
    started_utc: str
    stopped_utc: Optional[str] = None
    stop_reason: Optional[str] = None
    exit_code: int = 0
    files: Dict[str, str] = Field(default_factory=dict, description="nombre -> sha256")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    with open(path, "wb") as fh:
        fh.write(json_bytes(manifest.model_dump()))
    return path


def read_manifest(out_dir: Path) -> RunManifest:
    """
    Raises:
        ConfigError: no hay manifiesto
        CorruptArtifactError: manifiesto ilegible
    """
    path = Path(out_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ConfigError(f"no existe {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return RunManifest.model_validate(json.load(fh))
    except (json.JSONDecodeError, ValidationError, UnicodeDecodeError) as e:
        raise CorruptArtifactError(f"manifiesto ilegible: {e}") from e


def check_hashes(out_dir: Path, manifest: RunManifest) -> List[Tuple[str, bool]]:
    """Lista (archivo, hash coincide); un archivo ausente cuenta como no coincidente."""
    results = []
    for name, expected in sorted(manifest.files.items()):
        path = Path(out_dir) / name
        results.append((name, path.is_file() and sha256_file(path) == expected))
    return results

# ========================================
# LECTURA
# ========================================

def read_csv(path: Path) -> Tuple[List[str], List[List[float]]]:
    """
    Raises:
        CorruptArtifactError: CSV vacío, filas irregulares o valores no numéricos
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise CorruptArtifactError(f"{path}: {e}") from e
    if not rows:
        raise CorruptArtifactError(f"{path}: vacío")
    header, body = rows[0], rows[1:]
    values = []
    for line, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CorruptArtifactError(f"{path}:{line}: {len(row)} columnas, se esperaban {len(header)}")
        try:
            values.append([float(v) for v in row])
        except ValueError as e:
            raise CorruptArtifactError(f"{path}:{line}: {e}") from e
    return header, values


def read_columns(path: Path) -> Dict[str, List[float]]:
    header, rows = read_csv(path)
    return {name: [row[i] for row in rows] for i, name in enumerate(header)}


def read_json(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptArtifactError(f"{path}: {e}") from e

# ========================================
# LOCK
# ========================================

class LockedError(ConfigError):
    """Otro proceso tiene el directorio de salida."""

    kind = "locked"


@contextmanager
def output_lock(out_dir: Path):
    """Crea `.lock` con O_EXCL mientras dura la corrida; se elimina al salir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / LOCK_NAME
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise LockedError(f"{out_dir} está bloqueado por otra corrida ({path})") from e
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield path
    finally:
        try:
            path.unlink()
        except FileNotFoundError:
            pass
