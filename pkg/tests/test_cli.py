"""
Tests del CLI: verbos run, emit-plotdata y verify con sus códigos de salida.
"""

import json

import numpy as np
import pytest

import lab_cli
from geometry.convexgeom import encloses
from geometry.errors import DomainError
from geometry.spheregrid import AxisymmetricGrid
from runner.persistence import LOCK_NAME, MANIFEST_NAME, read_manifest
from runner.scenarios import nested_pairs

HOLDER_YAML = """\
name: holder_norms
seed: 3
params:
  function: sqrt_z
  alpha: 0.5
  z_max: 1.0
  z_min: 1.0e-6
  x_points: 5
  x_extent: 0.2
"""

CFL_YAML = """\
name: shrink_sphere
params:
  n: 2
  k: 2
  resolution: 16
  dt: 0.5
  adaptive: false
"""

ELLIPSOID_YAML = """\
name: shrink_ellipsoid
seed: 7
params:
  n: 2
  k: 2
  semi_axes: [1.0, 1.0, 1.5]
  resolution: 16
  dt: 1.0e-3
  comparison_pairs: 3
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


@pytest.fixture
def holder_run(tmp_path, capsys):
    """Corrida completa del escenario de normas; devuelve su directorio"""
    out = tmp_path / "holder"
    code = lab_cli.main(["run", "--config", str(_write(tmp_path, "holder.yaml", HOLDER_YAML)), "--out", str(out)])
    assert code == lab_cli.EXIT_OK
    capsys.readouterr()
    return out


# ========================================
# TESTS RUN
# ========================================

def test_run_escribe_artefactos_y_manifiesto(holder_run):
    manifest = read_manifest(holder_run)
    assert manifest.exit_code == 0
    assert manifest.stop_reason == "T_END"
    assert set(manifest.files) == {"sweep.csv", "report.json"}
    assert manifest.scenario["seed"] == 3
    assert not (holder_run / LOCK_NAME).exists()


def test_run_csv_con_crlf(holder_run):
    raw = (holder_run / "sweep.csv").read_bytes()
    assert raw.startswith(b"z,f\r\n")
    assert raw.endswith(b"\r\n")


def test_run_reporta_json(tmp_path, capsys):
    out = tmp_path / "run"
    lab_cli.main(["run", "--config", str(_write(tmp_path, "h.yaml", HOLDER_YAML)), "--out", str(out), "--seed", "9"])
    payload = _last_json(capsys)
    assert payload["status"] == "ok"
    assert payload["scenario"] == "holder_norms"
    assert read_manifest(out).scenario["seed"] == 9


def test_run_config_invalida(tmp_path, capsys):
    """Clave desconocida: código 2 y ningún artefacto"""
    bad = _write(tmp_path, "bad.yaml", HOLDER_YAML.replace("alpha: 0.5", "alpha: 0.5\n  beta: 1"))
    out = tmp_path / "bad"
    assert lab_cli.main(["run", "--config", str(bad), "--out", str(out)]) == lab_cli.EXIT_CONFIG
    payload = _last_json(capsys)
    assert payload["exit_code"] == 2
    assert payload["kind"] == "config"
    assert not out.exists()


def test_run_yaml_ilegible(tmp_path, capsys):
    bad = _write(tmp_path, "broken.yaml", "name: [holder_norms\n")
    assert lab_cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == lab_cli.EXIT_CONFIG


def test_run_directorio_bloqueado(tmp_path, capsys):
    out = tmp_path / "locked"
    out.mkdir()
    (out / LOCK_NAME).write_text("")
    config_path = _write(tmp_path, "h.yaml", HOLDER_YAML)
    assert lab_cli.main(["run", "--config", str(config_path), "--out", str(out)]) == lab_cli.EXIT_CONFIG
    assert _last_json(capsys)["kind"] == "locked"
    assert not (out / MANIFEST_NAME).exists()


def test_run_alarma_cfl(tmp_path, capsys):
    """Paso fijo excesivo: código 3, traza parcial y manifiesto con el motivo"""
    out = tmp_path / "cfl"
    code = lab_cli.main(["run", "--config", str(_write(tmp_path, "cfl.yaml", CFL_YAML)), "--out", str(out)])
    assert code == lab_cli.EXIT_ALARM
    payload = _last_json(capsys)
    assert payload["kind"] == "alarm"
    assert "trace.csv" in payload["files"]
    assert read_manifest(out).exit_code == 3

    assert lab_cli.main(["verify", "--out", str(out)]) == lab_cli.EXIT_VERIFY_FAILED


def test_run_error_de_dominio_sin_artefactos(tmp_path, capsys):
    """Semiejes no axisimétricos: el error aparece al ejecutar, código 2 y nada en disco"""
    bad = _write(tmp_path, "ell.yaml", ELLIPSOID_YAML.replace("[1.0, 1.0, 1.5]", "[1.0, 1.2, 1.5]"))
    out = tmp_path / "ell"
    assert lab_cli.main(["run", "--config", str(bad), "--out", str(out)]) == lab_cli.EXIT_CONFIG
    assert _last_json(capsys)["kind"] == "domain"
    assert not out.exists()


def test_run_error_de_dominio_descarta_parciales(tmp_path, capsys, monkeypatch):
    """Artefactos escritos antes del error se borran; el directorio previo se conserva"""
    def partial_then_fail(scenario, writer):
        writer.write_csv("trace.csv", ("t",), [(0.0,)])
        raise DomainError("fallo tras escribir")

    monkeypatch.setattr(lab_cli, "execute", partial_then_fail)
    out = tmp_path / "prev"
    out.mkdir()
    (out / "notas.txt").write_text("previo")
    config_path = _write(tmp_path, "h.yaml", HOLDER_YAML)
    assert lab_cli.main(["run", "--config", str(config_path), "--out", str(out)]) == lab_cli.EXIT_CONFIG
    assert not (out / "trace.csv").exists()
    assert not (out / MANIFEST_NAME).exists()
    assert (out / "notas.txt").read_text() == "previo"
    assert not (out / LOCK_NAME).exists()


def test_pares_anidados_reproducibles():
    grid = AxisymmetricGrid(2, 16)
    first, second = nested_pairs(grid, 4, seed=7), nested_pairs(grid, 4, seed=7)
    assert len(first) == 4
    for (a1, b1), (a2, b2) in zip(first, second):
        assert encloses(a1, b1)
        np.testing.assert_array_equal(b1.h, b2.h)


@pytest.mark.slow
def test_run_elipsoide_con_pares_de_comparacion(tmp_path, capsys):
    """Cada par se compara paso a paso hasta la extinción del interior, sin violaciones"""
    out = tmp_path / "ell"
    config_path = _write(tmp_path, "ell.yaml", ELLIPSOID_YAML)
    assert lab_cli.main(["run", "--config", str(config_path), "--out", str(out)]) == lab_cli.EXIT_OK
    comparison = json.loads((out / "report.json").read_text(encoding="utf-8"))["comparison"]
    assert comparison["pairs"] == 3
    assert comparison["extinct"] == 3
    assert comparison["violations"] == 0
    assert comparison["steps"] > 3
    assert comparison["max_excess"] < 0.0
    capsys.readouterr()

    assert lab_cli.main(["verify", "--out", str(out)]) in (lab_cli.EXIT_OK, lab_cli.EXIT_VERIFY_FAILED)
    assert "comparison principle" in capsys.readouterr().out

# ========================================
# TESTS VERIFY Y EMIT-PLOTDATA
# ========================================

def test_verify_corrida_valida(holder_run, capsys):
    assert lab_cli.main(["verify", "--out", str(holder_run)]) == lab_cli.EXIT_OK
    table = capsys.readouterr().out
    assert "C0_w(sqrt z) = 1" in table
    assert "FAIL" not in table


def test_verify_detecta_csv_alterado(holder_run, capsys):
    with open(holder_run / "sweep.csv", "ab") as fh:
        fh.write(b"1,1\r\n")
    assert lab_cli.main(["verify", "--out", str(holder_run)]) == lab_cli.EXIT_CORRUPT
    assert "sha256 mismatch" in capsys.readouterr().out


def test_verify_sin_manifiesto(tmp_path, capsys):
    assert lab_cli.main(["verify", "--out", str(tmp_path)]) == lab_cli.EXIT_CONFIG
    assert _last_json(capsys)["exit_code"] == 2


def test_verify_manifiesto_corrupto(tmp_path, capsys):
    (tmp_path / MANIFEST_NAME).write_text("{no es json")
    assert lab_cli.main(["verify", "--out", str(tmp_path)]) == lab_cli.EXIT_CORRUPT


def test_emit_plotdata(holder_run, capsys):
    assert lab_cli.main(["emit-plotdata", "--out", str(holder_run)]) == lab_cli.EXIT_OK
    payload = _last_json(capsys)
    names = sorted(p.rsplit("/", 1)[-1] for p in payload["files"])
    assert names == ["README_columns.txt", "z_f.dat"]
    lines = (holder_run / "plotdata" / "z_f.dat").read_text().splitlines()
    assert lines[0].startswith("# holder_norms")
    assert len(lines[1].split()) == 2


def test_emit_plotdata_sin_manifiesto(tmp_path, capsys):
    assert lab_cli.main(["emit-plotdata", "--out", str(tmp_path)]) == lab_cli.EXIT_CONFIG


# ========================================
# RUNNER
# ========================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
