from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from fabry.cli import main
from fabry.output import MODE_COLUMNS, SWEEP_COLUMNS

FIGURES = ["fig2", "fig4", "fig5", "fig6", "fig8"]


def _json_out(capsys, argv):
    rc = main(argv)
    return rc, json.loads(capsys.readouterr().out)


def test_partition_of_example(capsys):
    rc, data = _json_out(capsys, ["partition", "--config", "example"])
    assert rc == 0
    assert data["I"] == [1, 2, 5, 6, 7, 8, 10, 11, 13, 14, 15]


def test_spectrum_and_k0_override(capsys):
    rc, data = _json_out(capsys, ["spectrum", "--config", "fig4"])
    assert rc == 0 and data["m"] == 3 and data["n"] == 7
    rc, data = _json_out(capsys, ["spectrum", "--config", "fig4", "--k0", "1/3"])
    assert rc == 0 and data["k0_over_pi"] == "1/3"


def test_expand_table_and_json(capsys):
    assert main(["expand", "--config", "fig4"]) == 0
    text = capsys.readouterr().out
    assert "delta-type branches at k0: 1" in text
    rc, data = _json_out(capsys, ["expand", "--config", "fig4", "--json"])
    assert rc == 0 and len(data["branches"]) == 3 and data["delta_type"] == 1


def test_resonances_report_completeness(capsys):
    rc, data = _json_out(capsys, ["resonances", "--config", "fig4", "--delta", "1e-3"])
    assert rc == 0
    assert data["contour"]["winding"] == data["roots_inside_contour"] == data["n"] == 7
    assert data["distinct_roots"] == 7 and data["warnings"] == []


def test_complex_delta_is_accepted(capsys):
    rc, data = _json_out(capsys, ["resonances", "--config", "fig4", "--delta", "1e-3+1e-4j"])
    assert rc == 0 and data["n"] == 7


def test_converge_writes_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["converge", "--config", "fig4", "--points", "6", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 1 + 7 * 6
    assert "slopes" in capsys.readouterr().err


def test_eigenmode_csv_and_sidecar(tmp_path):
    out = tmp_path / "mode.csv"
    assert main(["eigenmode", "--config", "fig6", "--branch", "a", "--delta", "1e-3", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == MODE_COLUMNS
    side = json.loads(out.with_suffix(".json").read_text())
    assert {"branch", "radiation_residual", "beta", "fitted_amplitudes", "deviation", "gamma"} <= set(side)
    assert side["radiation_residual"] < 1e-8


def test_eigenmode_on_shared_eigenvalue_skips_prediction(tmp_path):
    out = tmp_path / "mode.csv"
    assert main(["eigenmode", "--config", "setting3", "--branch", "a", "--delta", "4e-3", "--out", str(out)]) == 0
    side = json.loads(out.with_suffix(".json").read_text())
    assert "degenerate" in side and "beta" not in side


def test_plot_detects_csv_kind(tmp_path):
    sweep, mode = tmp_path / "s.csv", tmp_path / "m.csv"
    main(["converge", "--config", "fig4", "--points", "4", "--out", str(sweep)])
    main(["eigenmode", "--config", "fig6", "--branch", "a", "--out", str(mode)])
    for src in (sweep, mode):
        svg = tmp_path / (src.stem + ".svg")
        assert main(["plot", str(src), "--out", str(svg)]) == 0
        assert svg.read_text().lstrip().startswith("<svg")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["plot", str(bad), "--out", str(tmp_path / "bad.svg")]) == 2


@pytest.mark.parametrize("name", FIGURES)
def test_figures_pass_their_checks(name, tmp_path, capsys):
    rc, data = _json_out(capsys, ["run-figure", name, "--outdir", str(tmp_path)])
    assert rc == 0 and data["ok"]
    assert all(data["checks"].values())
    assert data["files"] and all(Path(p).exists() for p in data["files"])


def test_figure_outputs_are_deterministic(tmp_path, capsys):
    first, second = tmp_path / "a", tmp_path / "b"
    for d in (first, second):
        assert main(["run-figure", "fig4", "--outdir", str(d)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for n in names:
        assert (first / n).read_bytes() == (second / n).read_bytes()


def test_verify_identities_prints_table(capsys):
    assert main(["verify-identities", "--samples", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_verify_all_fault_exit_code(tmp_path):
    out = tmp_path / "report.json"
    assert main(["verify-all", "--chains", "20", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["ok"]
    assert main(["verify-all", "--chains", "20", "--fault", "1e-6", "--out", str(out)]) == 1


def test_errors_exit_with_code_two(tmp_path, capsys):
    assert main(["partition", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"t": ["1", "-1", "1"], "k0_over_pi": "1"}))
    assert main(["partition", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err.lower()


def test_irrational_input_needs_float_mode(tmp_path, capsys):
    cfg = tmp_path / "irr.json"
    cfg.write_text(json.dumps({"t": ["1", "0.7071067811865476", "1"], "k0_over_pi": "1"}))
    rc, data = _json_out(capsys, ["partition", "--config", str(cfg), "--float-mode"])
    assert rc == 0 and data["I"] == [1, 3]
