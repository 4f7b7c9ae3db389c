import json

import numpy as np
import pytest
from scipy.signal import find_peaks

from remux.cli import main
from remux.config import config_to_dict, load_config
from remux.exceptions import PlotError
from remux.plotting import plot_csv, read_table
from remux.readout import read_shots_binary, read_shots_csv


def run(tmp_path, *argv):
    return main(["--out-dir", str(tmp_path), *argv])


def _csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_manifest_records_run(tmp_path):
    assert run(tmp_path, "--seed", "5", "sparams", "--format", "csv", "--points", "11") == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 5 and man["command"][0] == "remux" and len(man["config_hash"]) == 64
    assert man["outputs"] == [str(tmp_path / "sparams.csv")]


def test_subcommand_flags_match_global_ones(tmp_path):
    assert main(["sparams", "--out-dir", str(tmp_path), "--points", "11", "--seed", "9"]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 9


def test_sparams_touchstone(tmp_path):
    assert run(tmp_path, "sparams", "--points", "21") == 0
    lines = [ln for ln in (tmp_path / "sparams.s2p").read_text().splitlines() if ln and not ln.startswith("!")]
    assert lines[0].startswith("#") and len(lines) == 22


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "--device", str(tmp_path / "missing.json"), "sparams") == 2
    assert "cannot read" in capsys.readouterr().err
    assert run(tmp_path, "classify", "--shots", str(tmp_path / "none.csv")) == 2
    assert run(tmp_path, "readout", "--prepared", "01", "--shots", "10") == 2
    assert run(tmp_path, "sparams", "--start", "5 GHz", "--stop", "4 GHz") == 3
    assert run(tmp_path, "dephasing-scan", "--points", "3") == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_zero_qubit_device_is_config_error(tmp_path, device):
    data = config_to_dict(device)
    data["qubits"], data["resonators"] = [], []
    for key in ("C_pin", "C_direct", "C_drive", "C_g", "C_qubit", "C_r", "L_r"):
        data["coupling"][key] = []
    data["dephasing"].pop("stray_chi")
    (tmp_path / "empty.json").write_text(json.dumps(data))
    assert run(tmp_path, "--device", str(tmp_path / "empty.json"), "reproduce", "fig2b") == 2


def test_reproduce_fig3_peaks_at_resonators(tmp_path):
    assert run(tmp_path, "reproduce", "fig3") == 0
    data = _csv(tmp_path / "fig3.csv")
    idx, _ = find_peaks(data["tau"], prominence=0.2 * data["tau"].max())
    assert len(idx) == 4
    np.testing.assert_allclose(data["frequency"][idx], [9.871e9, 10.007e9, 10.139e9, 10.281e9], rtol=1e-4)
    assert (tmp_path / "fig3.svg").exists()


def test_reproduce_fig4_outputs(tmp_path):
    assert run(tmp_path, "reproduce", "fig4", "--shots", "5000") == 0
    for name in ("fig4.csv", "fig4.svg", "fig4_fidelity.json"):
        assert (tmp_path / name).exists()
    fid = json.loads((tmp_path / "fig4_fidelity.json").read_text())
    assert set(fid) == {"Q1", "Q2", "Q3", "Q4"}
    assert all(0.95 < v["P_c"] < 1 for v in fid.values())


def test_readout_then_classify(tmp_path):
    assert run(tmp_path, "readout", "--shots", "4000", "--format", "bin") == 0
    assert run(tmp_path, "readout", "--shots", "4000") == 0
    rec_bin = read_shots_binary(tmp_path / "shots.bin")
    rec_csv = read_shots_csv(tmp_path / "shots.csv")
    np.testing.assert_array_equal(rec_bin, rec_csv)
    assert len(rec_csv) == 2 * 4000 * 4
    assert run(tmp_path, "classify", "--shots", str(tmp_path / "shots.bin"), "--out", "bin.json") == 0
    assert run(tmp_path, "classify", "--shots", str(tmp_path / "shots.csv")) == 0
    a = json.loads((tmp_path / "bin.json").read_text())
    b = json.loads((tmp_path / "report.json").read_text())
    assert a == b
    assert 0.97 < b["mean_P_c"] < 0.995


def test_readout_is_seed_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run(tmp_path / d, "--seed", "3", "readout", "--shots", "500", "--prepared", "0101") == 0
    assert (tmp_path / "a" / "shots.csv").read_bytes() == (tmp_path / "b" / "shots.csv").read_bytes()
    assert run(tmp_path / "c", "--seed", "4", "readout", "--shots", "500", "--prepared", "0101") == 0
    assert (tmp_path / "a" / "shots.csv").read_bytes() != (tmp_path / "c" / "shots.csv").read_bytes()


def test_assignment_matrix_outputs(tmp_path):
    assert run(tmp_path, "assignment-matrix", "--shots", "4000", "--calibration-shots", "20000") == 0
    header, labels, values = read_table(tmp_path / "assignment_matrix.csv")
    assert header[1] == "gggg" and header[-1] == "eeee"
    assert labels[0] == "0000" and labels[-1] == "ππππ"
    np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-9)
    svg = (tmp_path / "assignment_matrix.svg").read_text()
    assert "prepared (Q1 Q2 Q3 Q4)" in svg and "gggg" in svg
    diag = json.loads((tmp_path / "assignment_diagnostics.json").read_text())
    assert diag["below_diagonal"] > diag["above_diagonal"]


def test_design_notch_accepts_bare_and_unit_targets(tmp_path):
    assert run(tmp_path, "design-notch", "--targets", "5.5e9,7.7 GHz") == 0
    notch = json.loads((tmp_path / "notch.json").read_text())
    np.testing.assert_allclose(notch["achieved"], [5.5e9, 7.7e9], rtol=0.01)
    assert min(notch["rejection_db"]) >= 20
    load_config(tmp_path / "device.json")
    assert (tmp_path / "objective_trace.csv").read_text().startswith("evaluation,")


def test_admittance_and_linewidth(tmp_path):
    assert run(tmp_path, "admittance", "--points", "51") == 0
    ratios = json.loads((tmp_path / "purcell.json").read_text())
    assert ratios["unfiltered_over_no_interference"] >= 10
    assert max(ratios["interference_over_no_interference"]) <= 0.1
    assert run(tmp_path, "fit-linewidth", "--points", "1501") == 0
    rows = json.loads((tmp_path / "linewidths.json").read_text())
    assert all(abs(r["ratio"] - 1) < 0.05 for r in rows)


def test_dephasing_scan_outputs(tmp_path):
    assert run(tmp_path, "dephasing-scan", "--points", "6", "--out", "m.csv") == 0
    for name in ("m.csv", "m.svg", "m_fit.json", "echo_contrast.csv"):
        assert (tmp_path / name).exists()
    _, labels, g = read_table(tmp_path / "m.csv")
    assert labels == ["Q1", "Q2", "Q3", "Q4"]
    assert np.all(np.diag(g) > 1e6)
    assert g[~np.eye(4, dtype=bool)].max() < 150
    fit = json.loads((tmp_path / "m_fit.json").read_text())
    assert np.all(np.array(fit["gamma_bound"]) >= np.array(fit["gamma"]))


# Plotting ---------------------------------------------------------------------------------

def test_plot_is_byte_deterministic(tmp_path):
    (tmp_path / "t.csv").write_text("x,a,b\n0,1,2\n1,2,3\n2,0,1\n")
    assert run(tmp_path, "plot", str(tmp_path / "t.csv"), "--kind", "trace", "--out", "1.svg") == 0
    assert run(tmp_path, "plot", str(tmp_path / "t.csv"), "--kind", "trace", "--out", "2.svg") == 0
    assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()


def test_heatmap_axis_labels(tmp_path):
    (tmp_path / "h.csv").write_text("prepared,00,01,10,11\n00,1,0,0,0\n01,0,1,0,0\n10,0,0,1,0\n11,0,0,0,1\n")
    svg = plot_csv(tmp_path / "h.csv", "heatmap")
    assert "measured (Q1 Q2)" in svg and "prepared (Q1 Q2)" in svg


@pytest.mark.parametrize("text,line", [("", None), ("x,y\n", 2), ("x,y\n1,2\n3\n", 3), ("x,y\n1,2\n3,abc\n", 3)])
def test_plot_errors_carry_line_numbers(tmp_path, text, line):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(PlotError) as exc:
        plot_csv(tmp_path / "bad.csv", "trace")
    assert exc.value.line == line
    assert run(tmp_path, "plot", str(tmp_path / "bad.csv"), "--kind", "trace") == 2
