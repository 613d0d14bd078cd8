# utils/logger.py
"""
Logging del laboratorio.

Consola en stderr siempre (stdout es del CLI) y un archivo diario por logger en
LOGS_DIR cuando QKLAB_FILE_LOGGING está activo. Los mensajes nunca tocan los
artefactos numéricos.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List

try:
    from config import ENABLE_FILE_LOGGING, LOG_LEVEL, LOGS_DIR
except ImportError:
    ENABLE_FILE_LOGGING = False
    LOG_LEVEL = "INFO"
    LOGS_DIR = Path("./logs")

LOG_FORMAT = '%(asctime)s | %(name)s | %(levelname)s | %(funcName)s:%(lineno)d | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

ALARM_EVENTS = {"alarm", "error", "exception"}


def _file_logging_available() -> bool:
    if not ENABLE_FILE_LOGGING:
        return False
    try:
        LOGS_DIR.mkdir(parents=True, exist_ok=True)
    except OSError:
        return False
    return True


USE_FILE_LOGGING = _file_logging_available()

# ========================================
# LOGGERS
# ========================================

def _handlers(name: str) -> List[logging.Handler]:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if USE_FILE_LOGGING:
        path = LOGS_DIR / f"{name}_{datetime.now():%Y%m%d}.log"
        try:
            handlers.append(logging.FileHandler(path, encoding='utf-8'))
        except OSError as e:
            print(f"⚠️ Sin archivo de log {path}: {e}", file=sys.stderr)
    return handlers


def get_logger(name: str, level: str = None) -> logging.Logger:
    """
    Logger del módulo `name` ('symfun', 'flowcore', 'cli', ...).

    Los handlers se instalan una sola vez y el logger no propaga al raíz.
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel((level or LOG_LEVEL).upper())
    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)
    for handler in _handlers(name):
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    logger.propagate = False
    return logger

# ========================================
# EVENTOS DE SISTEMA
# ========================================

def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def log_system_event(event_type: str, details: dict, logger_name: str = 'system'):
    """
    Una línea "[TIPO] k=v | k=v"; run_start, run_stop, alarm.

    Las alarmas y errores van a nivel ERROR, el resto a INFO.
    """
    logger = get_logger(logger_name)
    message = f"[{event_type.upper()}] " + " | ".join(f"{k}={_format_value(v)}" for k, v in details.items())
    if event_type.lower() in ALARM_EVENTS:
        logger.error(message)
    else:
        logger.info(message)
