import json

import numpy as np
import pytest
import yaml

from hairpin_seesaw.cli import run
from hairpin_seesaw.config import (ConfigError, load_config, read_csv_columns, resolve_config,
                                   shipped_configs)
from hairpin_seesaw.kinetics import integrate
from hairpin_seesaw.motifs import build_or_case_schedule, build_or_gate
from hairpin_seesaw.plot import emit_plot, render_svg


def test_shipped_configs_present():
    assert {"motif_3cycles", "orgate_4cases", "orgate_seq_d", "orgate_seq_e"} <= set(
        shipped_configs())
    assert resolve_config("motif3cycles").stem == "motif_3cycles"
    with pytest.raises(ConfigError, match="not found"):
        resolve_config("nothing_here")


def test_simulate_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "trace.csv"
    assert run(["simulate", "--config", "motif3cycles", "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    header = raw.split(b"\n", 1)[0].decode()
    assert header.startswith("time_s,G,I,F,R,") and header.endswith(",fluorescence_norm")
    cols = read_csv_columns(out)
    assert np.all(np.diff(cols["time_s"]) > 0)
    man = json.loads((tmp_path / "trace.csv.manifest.json").read_text())
    assert man["command"] == "simulate" and "numpy" in man["versions"]
    assert man["parameters"]["params"]["k_t"] == 2.743e6


def test_overrides_reach_the_model(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["simulate", "--out", str(out), "--kt", "1e6", "--normalization", "fixed:150"]) == 0
    man = json.loads((tmp_path / "t.csv.manifest.json").read_text())
    assert man["parameters"]["params"]["k_t"] == 1e6
    assert read_csv_columns(out)["fluorescence_norm"].max() <= 1.0 + 1e-9


def test_missing_config_exit_1(tmp_path, capsys):
    assert run(["simulate", "--config", str(tmp_path / "none.yaml"), "--out",
                str(tmp_path / "x.csv")]) == 1
    assert "none.yaml" in capsys.readouterr().err


def test_bad_arguments_exit_1():
    assert run(["simulate"]) == 1
    assert run(["frobnicate"]) == 1


def test_numerical_failure_exit_2(tmp_path):
    assert run(["simulate", "--out", str(tmp_path / "x.csv"), "--kt", "1e30",
                "--rtol", "1e-12"]) == 2


def test_fit_roundtrip(tmp_path):
    cfg = tmp_path / "one.yaml"
    assert run(["schedule", "--cycles", "1", "--phase", "600", "--output-dt", "4",
                "--out", str(cfg)]) == 0
    trace = tmp_path / "trace.csv"
    assert run(["simulate", "--config", str(cfg), "--out", str(trace), "--kt", "1.5e6"]) == 0
    report = tmp_path / "fit.yaml"
    assert run(["fit", "--model", "motif", "--config", str(cfg), "--data", str(trace),
                "--kmin", "1e5", "--kmax", "1e7", "--out", str(report)]) == 0
    doc = yaml.safe_load(report.read_text())
    assert doc["k_hat"] == pytest.approx(1.5e6, rel=0.01)
    assert (tmp_path / "fit.yaml.manifest.json").exists()


def test_enumerate_design_orgate(tmp_path, capsys):
    net = tmp_path / "net.txt"
    assert run(["enumerate", "--out", str(net)]) == 0
    assert len(net.read_text().splitlines()) == 11
    seq = tmp_path / "seq.tsv"
    assert run(["design", "--seed", "4", "--out", str(seq)]) == 0
    assert len(seq.read_text().splitlines()) == 16  # 8 sense domains + complements
    assert run(["orgate", "--cases", "00,11", "--phase", "600", "--out",
                str(tmp_path / "or.csv")]) == 0
    assert "case 2: ONON" in capsys.readouterr().out


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["simulate", "--config", "orgate_seq_d", "--out", str(a)]) == 0
    argv = json.loads((tmp_path / "a.csv.manifest.json").read_text())["argv"]
    argv[argv.index("--out") + 1] = str(b)
    assert run(argv) == 0
    assert a.read_bytes() == b.read_bytes()


def test_plot_markers(tmp_path):
    rs = load_config("motif_3cycles")
    tr = integrate(rs.network(), rs.schedule, output_dt_s=60.0)
    svg = emit_plot(tr, tmp_path / "p.svg", rs.schedule.marks).read_text()
    assert svg.count('class="event-marker"') == 6
    sched = build_or_case_schedule([(0, 0), (0, 1), (1, 0), (1, 1)], 600.0)
    tr = integrate(build_or_gate(), sched, output_dt_s=60.0)
    svg = emit_plot(tr, tmp_path / "or.svg", sched.marks).read_text()
    assert "case 1: OFFOFF" in svg and "case 4: ONON" in svg


def test_single_point_plot_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        render_svg([0.0], [1.0])
