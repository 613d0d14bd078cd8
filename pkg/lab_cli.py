# lab_cli.py
"""
Punto de entrada del laboratorio Q_k.

    python lab_cli.py run --config scenarios/shrink_sphere.yaml [--out DIR] [--seed N]
    python lab_cli.py emit-plotdata --out DIR
    python lab_cli.py verify --out DIR

Códigos de salida: 0 éxito, 1 verify con fallos, 2 configuración inválida o sin
manifiesto, 3 alarma de runtime (artefactos parciales listados), 4 artefactos corruptos.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import config
from geometry.errors import ConfigError, CorruptArtifactError, DomainError, OutOfScopeError, QkLabError
from runner.persistence import ArtifactWriter, RunManifest, load_scenario, output_lock, utc_now, write_manifest
from runner.plotdata import emit_plotdata
from runner.scenarios import execute
from runner.verification import verify_run

try:
    from utils.logger import get_logger, log_system_event
    logger = get_logger('cli')
except ImportError:
    import logging
    logger = logging.getLogger('cli')

    def log_system_event(event_type, details, logger_name='system'):
        logger.info(f"[{event_type.upper()}] {details}")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_ALARM = 3
EXIT_CORRUPT = 4


def _fail(error: Exception, code: int) -> int:
    kind = getattr(error, "kind", type(error).__name__)
    print(json.dumps({"error": str(error), "kind": kind, "exit_code": code}))
    logger.error(f"❌ {kind}: {error}")
    return code


def _exit_code_for(error: QkLabError) -> int:
    if isinstance(error, (ConfigError, DomainError, OutOfScopeError)):
        return EXIT_CONFIG
    if isinstance(error, CorruptArtifactError):
        return EXIT_CORRUPT
    return EXIT_ALARM


def _remove_if_empty(out: Path) -> None:
    """Quita el directorio de salida creado por esta corrida si quedó vacío."""
    for path in sorted(out.rglob("*"), key=lambda p: len(p.parts), reverse=True):
        if path.is_dir() and not any(path.iterdir()):
            path.rmdir()
    if out.is_dir() and not any(out.iterdir()):
        out.rmdir()

# ========================================
# VERBOS
# ========================================

def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.config)
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    out = Path(args.out or scenario.output_dir or config.DEFAULT_OUTPUT_DIR / scenario.name)
    fresh_dir = not out.exists()

    try:
        with output_lock(out):
            writer = ArtifactWriter(out)
            manifest = RunManifest(scenario=scenario.model_dump(mode="json"), started_utc=utc_now())
            log_system_event("run_start", {"scenario": scenario.name, "out": out, "seed": scenario.seed},
                             logger_name='cli')
            try:
                outcome = execute(scenario, writer)
            except QkLabError as e:
                code = _exit_code_for(e)
                if code == EXIT_CONFIG:
                    writer.discard()
                else:
                    manifest.stop_reason = e.kind
                    manifest.exit_code = code
                    manifest.stopped_utc = utc_now()
                    manifest.files = dict(writer.files)
                    write_manifest(out, manifest)
                failure = e
            else:
                failure = None
                code = EXIT_ALARM if outcome.alarm else EXIT_OK
                manifest.stop_reason = outcome.stop_reason
                manifest.exit_code = code
                manifest.stopped_utc = utc_now()
                manifest.files = dict(writer.files)
                write_manifest(out, manifest)
                log_system_event("run_stop", {"scenario": scenario.name, "reason": outcome.stop_reason,
                                              "exit_code": code}, logger_name='cli')
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)

    if failure is not None:
        if code == EXIT_CONFIG and fresh_dir:
            _remove_if_empty(out)
        return _fail(failure, code)

    if code == EXIT_ALARM:
        print(json.dumps({"error": f"alarma de runtime: {outcome.alarm}", "kind": "alarm",
                          "exit_code": code, "files": sorted(writer.files)}))
        return code
    print(json.dumps({"status": "ok", "scenario": scenario.name, "out": str(out),
                      "stop_reason": outcome.stop_reason, "files": sorted(writer.files)}))
    return EXIT_OK


def cmd_emit_plotdata(args) -> int:
    try:
        written = emit_plotdata(Path(args.out))
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except CorruptArtifactError as e:
        return _fail(e, EXIT_CORRUPT)
    print(json.dumps({"status": "ok", "files": [str(p) for p in written]}))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        table = verify_run(Path(args.out))
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except (CorruptArtifactError, KeyError) as e:
        return _fail(CorruptArtifactError(f"artefacto incompleto: {e}"), EXIT_CORRUPT)
    print(table.render())
    if table.corrupt:
        return EXIT_CORRUPT
    return EXIT_OK if table.passed else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab_cli", description="Laboratorio numérico del flujo Q_k")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Ejecuta un escenario YAML")
    run_p.add_argument("--config", type=Path, required=True, help="Archivo YAML del escenario")
    run_p.add_argument("--out", type=Path, default=None, help="Directorio de salida")
    run_p.add_argument("--seed", type=int, default=None, help="Semilla (reemplaza la del escenario)")
    run_p.set_defaults(func=cmd_run)

    plot_p = sub.add_parser("emit-plotdata", help="Escribe series de dos columnas para gnuplot")
    plot_p.add_argument("--out", type=Path, required=True, help="Directorio de una corrida")
    plot_p.set_defaults(func=cmd_emit_plotdata)

    verify_p = sub.add_parser("verify", help="Re-chequea los artefactos de una corrida")
    verify_p.add_argument("--out", type=Path, required=True, help="Directorio de una corrida")
    verify_p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
