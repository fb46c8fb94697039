import csv
import json

import pytest
import yaml

from stabcoll.cli import ERROR_HEADER, OUTPUT_ROOT_ENV, main, run, sweep
from stabcoll.config import RunConfig, config_from_mapping, load_config
from stabcoll.exceptions import ConfigError

from conftest import DATA


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# --- configuration ----------------------------------------------------------
@pytest.mark.parametrize("data,match", [
    ({"problem": "nope"}, "unknown problem"),
    ({"problem": "sine1d", "form": "rotational"}, "flow problems only"),
    ({"problem": "stokes_vortex", "form": "rotational", "degree": 1}, "degree >= 2"),
    ({"problem": "sine1d", "degree": 1}, "SUPG needs degree"),
    ({"problem": "sine1d", "n_elem": []}, "empty"),
    ({"problem": "sine1d", "knots": "wavy"}, "knots"),
    ({"problem": "sine1d", "pe": -1}, "Pe must be positive"),
    ({"problem": "ns_vortex", "constants": {"C2": 0}}, "C2"),
    ({"problem": "ns_vortex", "constants": {"C": -1}}, "non-negative"),
    ({"problem": "ns_vortex", "solver": {"tau_jacobian": "exact"}}, "tau_jacobian"),
    ({"problem": "ns_vortex", "solver": {"foo": 1}}, "unknown keys in solver"),
    ({"problem": "ns_vortex", "colour": "red"}, "unknown configuration keys"),
    ({"problem": "ns_vortex", "reference": {"u": "a.txt"}}, "only compared for ns_cavity"),
    ({"problem": "ns_vortex", "solver": {"rtol": "tiny"}}, "non-numeric"),
])
def test_invalid_configs(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_mapping(data)


def test_defaults_and_string_numbers(tmp_path):
    cfg = load_config(write_cfg(tmp_path, {"problem": "kovasznay", "solver": {"rtol": "1e-9"}}))
    assert cfg.re == 40.0 and cfg.solver.rtol == 1e-9
    assert cfg.equations == "ns_vp"
    assert RunConfig("bl1d").pe == 500.0
    assert RunConfig("ns_cavity", form="rotational").equations == "ns_rot"


def test_with_value_axes():
    cfg = RunConfig("stokes_vortex")
    assert cfg.with_value("C", "10").constants.C == 10.0
    assert cfg.with_value("k", 3).degree == 3
    with pytest.raises(ConfigError):
        cfg.with_value("Re", 100)
    with pytest.raises(ConfigError):
        cfg.with_value("n_elem", 2.5)


# --- solve ------------------------------------------------------------------
def test_bl1d_run_artifacts(tmp_path):
    cfg = write_cfg(tmp_path, {"problem": "bl1d", "degree": 4, "n_elem": 16,
                               "output": {"vtk": True, "matrix_market": True}})
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--output", str(out)]) == 0
    err = read_rows(out / "errors.csv")
    assert err[0] == list(ERROR_HEADER)
    assert [r[3:5] for r in err[1:]] == [["phi", "l2"], ["phi", "h1"]]
    fields = read_rows(out / "fields.csv")
    assert fields[0] == ["x", "phi"]
    assert len(fields) - 1 == 16 * 4 + 1
    vtk = (out / "fields.vtk").read_text().splitlines()
    assert vtk[0] == "# vtk DataFile Version 3.0"
    assert vtk[2:4] == ["ASCII", "DATASET STRUCTURED_POINTS"]
    assert vtk[4] == "DIMENSIONS 65 1 1"
    assert (out / "system.mtx").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["constants"]["C1"] == 4.0
    assert manifest["config"]["stabilization"]["supg"] is True
    assert "overshoot" in json.dumps(manifest["runs"][0]["metrics"])


def test_mesh_list_writes_rates(tmp_path):
    m = run(RunConfig("sine1d", degree=2, n_elem=[8, 16, 32]), tmp_path)
    rates = {(r["field"], r["norm"]): r["rate"] for r in m["rates"]}
    assert rates[("phi", "l2")] == pytest.approx(2.0, abs=0.3)
    assert (tmp_path / "fields_n16.csv").exists()
    assert read_rows(tmp_path / "rates.csv")[0] == ["k", "field", "norm", "rate"]


def test_flow_fields_header_and_vtk(tmp_path):
    cfg = RunConfig("stokes_vortex", form="rotational", degree=3, n_elem=4)
    cfg.output.vtk = True
    m = run(cfg, tmp_path)
    assert read_rows(tmp_path / "fields.csv")[0] == ["x", "y", "u_x", "u_y", "p", "omega"]
    text = (tmp_path / "fields.vtk").read_text()
    assert "VECTORS velocity double" in text and "SCALARS p double 1" in text
    assert "divergence_max" in m["runs"][0]["metrics"]
    fields = {e["field"] for e in m["runs"][0]["errors"]}
    assert fields == {"u", "p"}


def test_byte_identical_reruns_and_manifest_rerun(tmp_path):
    cfg = write_cfg(tmp_path, {"problem": "ns_vortex", "degree": 3, "n_elem": 4})
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["solve", "--config", str(cfg), "--output", str(a)]) == 0
    assert main(["solve", "--config", str(cfg), "--output", str(b)]) == 0
    assert main(["solve", "--config", str(a / "manifest.json"), "--output", str(c)]) == 0
    for name in ("fields.csv", "errors.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
    hist = json.loads((a / "manifest.json").read_text())["runs"][0]["newton"]
    assert hist


def test_cavity_reference_metrics(tmp_path):
    cfg = write_cfg(tmp_path, {
        "problem": "ns_cavity", "degree": 3, "n_elem": 8, "re": 100,
        "constants": {"C": 10},
        "reference": {"u": str(DATA / "ghia_re100_u.txt"), "v": str(DATA / "ghia_re100_v.txt")}})
    assert main(["solve", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    metrics = m["runs"][0]["metrics"]
    assert {"reference_u_rms", "reference_v_rms"} <= set(metrics)
    assert read_rows(tmp_path / "o" / "centerline_u.csv")[0] == ["y", "u_x"]


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    cfg = write_cfg(tmp_path, {"problem": "sine1d", "n_elem": 4, "output": {"directory": "here"}})
    assert main(["solve", "--config", str(cfg)]) == 0
    assert (tmp_path / "root" / "here" / "manifest.json").exists()


# --- exit codes ---------------------------------------------------------------
def test_exit_code_validation(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"problem": "sine1d", "form": "rotational"})
    assert main(["solve", "--config", str(cfg)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_exit_code_nonconvergence(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"problem": "ns_vortex", "re": 100, "degree": 2, "n_elem": 4,
                               "solver": {"max_iter": 1}})
    assert main(["solve", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 3
    assert "did not converge" in capsys.readouterr().err


# --- sweeps ---------------------------------------------------------------
def test_c_sweep_rows(tmp_path):
    cfg = write_cfg(tmp_path, {"problem": "stokes_vortex", "degree": 2, "n_elem": [2, 4]})
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg), "--axis", "C", "--values", "0,1,10,100",
                 "--output", str(out)]) == 0
    rows = read_rows(out / "sweep_C.csv")
    assert rows[0] == ["axis", "value"] + list(ERROR_HEADER)
    velocity_l2 = [r for r in rows[1:] if r[5] == "u" and r[6] == "l2"]
    assert len(velocity_l2) == 8
    for n in ("2", "4"):
        assert [r[1] for r in velocity_l2 if r[3] == n] == ["0", "1", "10", "100"]
    assert (out / "C_10" / "manifest.json").exists()


def test_k_sweep_parallel_matches_serial(tmp_path):
    cfg = RunConfig("sine1d", n_elem=[4, 8, 16])
    a = sweep(cfg, "k", [2, 3], tmp_path / "a", jobs=1)
    sweep(cfg, "k", [2, 3], tmp_path / "b", jobs=2)
    assert (tmp_path / "a" / "sweep_k.csv").read_bytes() == (tmp_path / "b" / "sweep_k.csv").read_bytes()
    assert len(a["rates"]) == 4


def test_empty_sweep_values(tmp_path):
    cfg = write_cfg(tmp_path, {"problem": "sine1d"})
    assert main(["sweep", "--config", str(cfg), "--axis", "k", "--values", " , "]) == 2
    with pytest.raises(ConfigError):
        sweep(RunConfig("sine1d"), "k", [], tmp_path)
