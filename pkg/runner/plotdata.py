# runner/plotdata.py
"""Archivos de dos columnas compatibles con gnuplot; no se renderiza nada."""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from runner.persistence import format_real, read_columns, read_json, read_manifest

try:
    from utils.logger import get_logger
    logger = get_logger('plotdata')
except ImportError:
    import logging
    logger = logging.getLogger('plotdata')

PLOT_DIR = "plotdata"

# (archivo fuente, columna x, columna y, nombre de salida)
SERIES: Dict[str, List[Tuple[str, str, str, str]]] = {
    "shrink_sphere": [("trace.csv", "t", "volume", "t_volume.dat"),
                      ("trace.csv", "t", "F_min", "t_F_min.dat"),
                      ("trace.csv", "t", "asphericity", "t_asphericity.dat")],
    "shrink_ellipsoid": [("trace.csv", "t", "volume", "t_volume.dat"),
                         ("trace.csv", "t", "F_min", "t_F_min.dat"),
                         ("trace.csv", "t", "maxH_over_F", "t_maxH_over_F.dat"),
                         ("trace.csv", "t", "min_radius", "t_min_radius.dat")],
    "viscosity_convergence": [("sweep.csv", "epsilon_fine", "difference", "epsilon_difference.dat")],
    "dilation_uniqueness": [("sweep.csv", "delta", "deviation", "delta_deviation.dat")],
    "flat_side_lens": [("rho.csv", "t", "rho2", "t_rho2.dat"),
                       ("rho.csv", "t", "lambda_star", "t_lambda_star.dat")],
    "linearization_audit": [("sweep.csv", "z", "a11_minors", "logz_loga11.dat"),
                            ("sweep.csv", "z", "dQ_dlambda1", "logz_logdQ.dat")],
    "holder_norms": [("sweep.csv", "z", "f", "z_f.dat")],
}

LOG_LOG = {"logz_loga11.dat", "logz_logdQ.dat"}


def _header(name: str, scenario: str, out: Path) -> List[str]:
    lines = [f"# {scenario}: {name}"]
    if name == "t_rho2.dat":
        law = read_json(out / "report.json").get("interface_law")
        if law:
            lines.append(f"# fitted slope = {format_real(law['fitted_slope'])}"
                         f"  predicted = {format_real(law['predicted_slope'])}")
    return lines


def _write_series(path: Path, header: Sequence[str], xs: Sequence[float], ys: Sequence[float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        for x, y in zip(xs, ys):
            fh.write(f"{format_real(x)} {format_real(y)}\n")


def emit_plotdata(out_dir: Path, target: Optional[Path] = None) -> List[Path]:
    """
    Escribe un archivo por serie más README_columns.txt.

    Raises:
        ConfigError: el directorio no tiene manifiesto
    """
    out = Path(out_dir)
    manifest = read_manifest(out)
    scenario = manifest.scenario.get("name", "?")
    dest = Path(target) if target is not None else out / PLOT_DIR
    dest.mkdir(parents=True, exist_ok=True)
    logger.info(f"🔧 Emitiendo datos de gráficos para {scenario} en {dest}")

    written, readme = [], [f"Series de {scenario} (dos columnas separadas por espacio):"]
    for source, x_col, y_col, name in SERIES.get(scenario, []):
        if source not in manifest.files:
            continue
        cols = read_columns(out / source)
        xs, ys = cols[x_col], cols[y_col]
        if name in LOG_LOG:
            pairs = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
            xs, ys = [p[0] for p in pairs], [p[1] for p in pairs]
            readme.append(f"  {name}: log {x_col}  log {y_col}")
        else:
            readme.append(f"  {name}: {x_col}  {y_col}")
        path = dest / name
        _write_series(path, _header(name, scenario, out), xs, ys)
        written.append(path)

    readme_path = dest / "README_columns.txt"
    with open(readme_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(readme) + "\n")
    written.append(readme_path)
    logger.info(f"✅ {len(written)} archivos de datos de gráficos")
    return written
