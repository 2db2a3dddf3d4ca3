"""Command-line surface: files, exit codes, determinism, provenance."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from licam_lab.cli import main
from licam_lab import presets

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
CALIB = str(CONFIG_DIR / "calibrated_ecdl.cfg")
NV = str(CONFIG_DIR / "nv_absorber.cfg")
SYNTH1 = str(CONFIG_DIR / "synth1.cfg")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def li_csv(tmp_path):
    out = tmp_path / "li.csv"
    assert run("synth", "li-curve", "--params", CALIB, "--absorber", NV,
               "--currents", "2mA:200mA:2mA", "--noise", "0.01",
               "--seed", "3", "--out", out) == 0
    return out


class TestSynth:
    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run("synth", "timeseries", "--floor", "2e-5",
                       "--tone", "100,0.001", "--fs", "10kHz",
                       "--duration", "0.2s", "--seed", "7", "--out", out) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_li_curve_columns(self, li_csv):
        header = li_csv.read_text().splitlines()[0]
        assert header == "i_a,p_w"

    def test_flat_odmr_trace_at_zero_contrast(self, tmp_path):
        out = tmp_path / "flat.csv"
        assert run("synth", "odmr-trace", "--contrast", "0",
                   "--grid", "2.73GHz:2.757GHz:64", "--out", out) == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        assert np.all(rows[:, 1] == 0.0)

    def test_unknown_kind_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run("synth", "spectrum", "--out", tmp_path / "x.csv")
        assert excinfo.value.code == 2


class TestFitLi:
    def test_golden_reproducibility(self, tmp_path, li_csv):
        out1, out2 = tmp_path / "fit1.json", tmp_path / "fit2.json"
        for out in (out1, out2):
            assert run("fit-li", "--data", li_csv, "--params", CALIB,
                       "--absorber", NV, "--out", out) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_recovers_threshold(self, tmp_path, li_csv):
        out = tmp_path / "fit.json"
        assert run("fit-li", "--data", li_csv, "--params", CALIB,
                   "--absorber", NV, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["result"]["converged"] is True
        assert abs(payload["result"]["derived"]["i_th_a"] - 0.116) < 1e-3
        for key in ("tool", "version", "command", "seed", "inputs", "config"):
            assert key in payload
        assert payload["inputs"]["data"]

    def test_empty_csv_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        out = tmp_path / "fit.json"
        code = run("fit-li", "--data", bad, "--params", CALIB, "--out", out)
        assert code == 2
        assert "i_a,p_w" in capsys.readouterr().err
        assert not out.exists()

    def test_wrong_header_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("current,power\n1,2\n")
        assert run("fit-li", "--data", bad, "--params", CALIB,
                   "--out", tmp_path / "f.json") == 2

    def test_below_threshold_exits_3_with_report(self, tmp_path, capsys):
        sub = tmp_path / "sub.csv"
        assert run("synth", "li-curve", "--params", CALIB, "--absorber", NV,
                   "--currents", "2mA:80mA:2mA", "--out", sub) == 0
        out = tmp_path / "fit.json"
        code = run("fit-li", "--data", sub, "--params", CALIB, "--out", out)
        assert code == 3
        assert "DegenerateData" in capsys.readouterr().err
        payload = json.loads(out.read_text())
        assert payload["error"]["type"] == "DegenerateData"


class TestSimulate:
    def test_outputs_and_echo(self, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        assert run("simulate", "--params", CALIB, "--absorber", NV,
                   "--currents", "1mA:200mA:2mA", "--linewidth", "1.85MHz",
                   "--out", out) == 0
        echoed = capsys.readouterr().out
        assert "params.wavelength" in echoed
        assert "linewidth_fwhm = 1850000.0" in echoed
        header = out.read_text().splitlines()[0]
        assert header == ("i_a,p_off_w,p_on_w,tau_eff,contrast,xi,"
                          "snls_t_per_sqrthz,status")
        summary = json.loads(out.with_suffix(".summary.json").read_text())
        i_th = summary["summary"]["threshold_current"]
        peak = summary["summary"]["peak_enhancement_current"]
        assert abs(peak - i_th) < 5e-3 * i_th

    def test_transparent_absorber_columns(self, tmp_path):
        transparent = tmp_path / "clear.cfg"
        transparent.write_text(
            "delta_alpha = 0\nabsorber_length = 10um\n"
        )
        out = tmp_path / "scan.csv"
        assert run("simulate", "--params", CALIB, "--absorber", transparent,
                   "--currents", "10mA:200mA:10mA", "--out", out) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        contrast = np.array([float(r[4]) for r in rows])
        xi = np.array([float(r[5]) for r in rows])
        assert np.all(contrast == 0.0)
        assert np.all(xi == 1.0)

    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("wavelength = 1042nm\nnot_a_key = 3\n")
        assert run("simulate", "--params", bad, "--absorber", NV,
                   "--currents", "1mA:10mA:1mA",
                   "--out", tmp_path / "x.csv") == 2
        assert "not_a_key" in capsys.readouterr().err

    def test_per_current_failures_become_status_rows(self, tmp_path):
        """A parameter set whose linearization loses its root at low
        currents still completes; the failing currents carry a status."""
        import dataclasses
        from licam_lab.config import laser_params_to_config
        shallow = dataclasses.replace(
            presets.synth1(),
            recomb_slope=1.2 * presets.synth1().recomb_at_threshold
            / presets.synth1().anchor_density,
        )
        cfg = tmp_path / "shallow.cfg"
        cfg.write_text("\n".join(
            f"{k} = {v!r}" for k, v in laser_params_to_config(shallow).items()
        ) + "\n")
        out = tmp_path / "scan.csv"
        assert run("simulate", "--params", cfg, "--absorber", NV,
                   "--currents", "1mA:160mA:2mA", "--out", out) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        statuses = {r[-1] for r in rows}
        assert "no_physical_root" in statuses
        assert "ok" in statuses
        bad = [r for r in rows if r[-1] != "ok"]
        assert all(r[4] == "nan" for r in bad)

    def test_no_refine_keeps_uniform_grid(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert run("simulate", "--params", CALIB, "--absorber", NV,
                   "--currents", "10mA:200mA:10mA", "--no-refine",
                   "--out", out) == 0
        assert len(out.read_text().splitlines()) == 1 + 20


class TestSweep:
    def test_grid_csv_and_manifest(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run("sweep", "--params", SYNTH1, "--absorber", NV,
                   "--grid-g", "1e-21:1e-20:4:log", "--grid-rf", "0.6,0.9",
                   "--current-limit", "91mA", "--linewidth", "1.85MHz",
                   "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ("g_m2,rf,delta_alpha_per_m,i_opt_a,"
                            "snls_t_per_sqrthz,xi,regime,status")
        assert len(lines) == 1 + 8
        regimes = {line.split(",")[6] for line in lines[1:]}
        assert regimes <= {"BelowThreshold", "AtThreshold", "AtCurrentLimit"}
        manifest = json.loads(out.with_suffix(".manifest.json").read_text())
        assert manifest["n_cells"] == 8
        assert "timing_s" in manifest

    def test_single_cell_matches_simulate_summary(self, tmp_path):
        sweep_out = tmp_path / "cell.csv"
        params = presets.synth1()
        assert run("sweep", "--params", SYNTH1, "--absorber", NV,
                   "--grid-g", repr(params.differential_gain),
                   "--grid-rf", repr(params.reflectivity_front),
                   "--current-limit", "160mA", "--linewidth", "1.85MHz",
                   "--out", sweep_out) == 0
        row = sweep_out.read_text().splitlines()[1].split(",")
        scan_out = tmp_path / "scan.csv"
        assert run("simulate", "--params", SYNTH1, "--absorber", NV,
                   "--currents", "1mA:160mA:1mA", "--linewidth", "1.85MHz",
                   "--out", scan_out) == 0
        summary = json.loads(
            scan_out.with_suffix(".summary.json").read_text()
        )["summary"]
        assert float(row[4]) == pytest.approx(summary["best_snls"], rel=1e-9)
        assert float(row[3]) == pytest.approx(summary["best_snls_current"],
                                              rel=1e-9)

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LICAM_LAB_THREADS", "3")
        out = tmp_path / "sweep.csv"
        assert run("sweep", "--params", SYNTH1, "--absorber", NV,
                   "--grid-g", "4e-21,8e-21", "--grid-rf", "0.8",
                   "--current-limit", "160mA", "--out", out) == 0
        manifest = json.loads(out.with_suffix(".manifest.json").read_text())
        assert manifest["config"]["threads"] == 3


class TestFitOdmr:
    def test_golden_and_center(self, tmp_path):
        trace = tmp_path / "odmr.csv"
        assert run("synth", "odmr-trace", "--contrast", "0.018",
                   "--linewidth", "1.85MHz", "--center", "2.7435GHz",
                   "--mod-depth", "4.5MHz", "--grid", "2.73GHz:2.757GHz:201",
                   "--noise", "1e-5", "--seed", "11", "--out", trace) == 0
        out1, out2 = tmp_path / "o1.json", tmp_path / "o2.json"
        for out in (out1, out2):
            assert run("fit-odmr", "--data", trace, "--out", out) == 0
        assert out1.read_bytes() == out2.read_bytes()
        payload = json.loads(out1.read_text())
        center = payload["fit"]["center"]
        linewidth = payload["fit"]["linewidth_fwhm"]
        assert abs(center - 2.7435e9) < 0.1 * linewidth
        assert payload["fit"]["zero_crossing_slope"] != 0.0

    def test_constant_trace_exits_3(self, tmp_path, capsys):
        flat = tmp_path / "flat.csv"
        flat.write_text("f_hz,signal\n" + "\n".join(
            f"{2.7e9 + i * 1e5},1.0" for i in range(64)
        ) + "\n")
        assert run("fit-odmr", "--data", flat,
                   "--out", tmp_path / "o.json") == 3
        assert "FlatTrace" in capsys.readouterr().err


class TestSensitivity:
    @pytest.fixture()
    def ts_csv(self, tmp_path):
        out = tmp_path / "ts.csv"
        assert run("synth", "timeseries", "--floor", "2e-5", "--fs", "10kHz",
                   "--duration", "1s", "--seed", "5", "--out", out) == 0
        return out

    def test_band_echo_and_asd(self, ts_csv, tmp_path):
        out = tmp_path / "sens.json"
        assert run("sensitivity", "--data", ts_csv, "--slope", "1e-6",
                   "--band", "1,1000", "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["result"]["band_hz"] == [1.0, 1000.0]
        assert payload["result"]["sample_rate_hz"] == pytest.approx(1e4,
                                                                    rel=1e-9)
        asd_csv = out.with_suffix(".asd.csv")
        assert asd_csv.read_text().splitlines()[0] == "f_hz,asd"

    def test_known_floor_recovered(self, ts_csv, tmp_path):
        from licam_lab.constants import GYROMAGNETIC_HZ_PER_T
        out = tmp_path / "sens.json"
        assert run("sensitivity", "--data", ts_csv, "--slope", "1e-6",
                   "--band", "1,1000", "--out", out) == 0
        payload = json.loads(out.read_text())
        expected = 2e-5 / 1e-6 / GYROMAGNETIC_HZ_PER_T
        assert payload["result"]["sensitivity_t_per_sqrthz"] == pytest.approx(
            expected, rel=0.05
        )

    def test_zero_band_edge_exits_4(self, ts_csv, tmp_path):
        assert run("sensitivity", "--data", ts_csv, "--slope", "1e-6",
                   "--band", "0,1000", "--out", tmp_path / "s.json") == 4

    def test_band_beyond_nyquist_exits_4(self, ts_csv, tmp_path):
        assert run("sensitivity", "--data", ts_csv, "--slope", "1e-6",
                   "--band", "1,6000", "--out", tmp_path / "s.json") == 4

    def test_nonuniform_sampling_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        times = np.linspace(0, 1, 64)
        times[10] += 1e-3
        bad.write_text("t_s,signal\n" + "\n".join(
            f"{t},0.0" for t in times
        ) + "\n")
        assert run("sensitivity", "--data", bad, "--slope", "1e-6",
                   "--band", "1,10", "--out", tmp_path / "s.json") == 2


class TestWeightedFit:
    def test_noise_column_accepted(self, tmp_path, li_csv):
        rows = li_csv.read_text().splitlines()
        weighted = tmp_path / "weighted.csv"
        body = ["i_a,p_w,noise_w"]
        for line in rows[1:]:
            i, p = line.split(",")
            body.append(f"{i},{p},{0.01 * abs(float(p)) + 1e-12}")
        weighted.write_text("\n".join(body) + "\n")
        out = tmp_path / "fit.json"
        assert run("fit-li", "--data", weighted, "--params", CALIB,
                   "--absorber", NV, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["config"]["weighted"] is True
        assert payload["result"]["converged"] is True


class TestScaling:
    def test_scaling_outputs(self, tmp_path):
        improved = str(CONFIG_DIR / "improved_prospective.cfg")
        out = tmp_path / "scaling.csv"
        assert run("scaling", "--params", improved, "--absorber-length",
                   "1e-2", "--delta-alphas", "1e-3:10:18:log",
                   "--current-limits", "200mA", "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ("delta_alpha_per_m,i_c_a,snls_t_per_sqrthz,"
                            "regime,local_slope,status")
        assert len(lines) == 1 + 18
        manifest = json.loads(out.with_suffix(".manifest.json").read_text())
        assert "boundaries" in manifest


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "licam_lab.cli", "--version"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "licam-lab" in result.stdout


class TestRemoteErrors:
    def test_unreachable_server_exits_2(self, tmp_path, capsys):
        code = run("synth", "timeseries", "--floor", "1e-5", "--fs", "10kHz",
                   "--duration", "0.1s", "--out", tmp_path / "x.csv",
                   "--server", "http://127.0.0.1:9")
        assert code == 2
        assert "failed" in capsys.readouterr().err


class TestRemoteServer:
    def test_cli_against_running_service(self, tmp_path):
        """The thin client behaves identically against a live server."""
        import socket
        import time as _time

        import httpx

        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            port = sock.getsockname()[1]
        server = subprocess.Popen(
            [sys.executable, "-m", "uvicorn",
             "licam_lab.service:app", "--host", "127.0.0.1",
             "--port", str(port), "--log-level", "error"],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        base = f"http://127.0.0.1:{port}"
        try:
            for _ in range(100):
                try:
                    if httpx.get(base + "/health", timeout=1.0).status_code == 200:
                        break
                except httpx.TransportError:
                    _time.sleep(0.1)
            else:
                pytest.skip("service did not come up")
            local = tmp_path / "local.csv"
            remote = tmp_path / "remote.csv"
            common = ["synth", "timeseries", "--floor", "1e-5", "--fs",
                      "10kHz", "--duration", "0.1s", "--seed", "4"]
            assert run(*common, "--out", local) == 0
            assert run(*common, "--out", remote, "--server", base) == 0
            assert local.read_bytes() == remote.read_bytes()

            # remote errors map back to the same exit codes
            flat = tmp_path / "flat.csv"
            flat.write_text("f_hz,signal\n" + "\n".join(
                f"{2.7e9 + i * 1e5},1.0" for i in range(64)) + "\n")
            assert run("fit-odmr", "--data", flat, "--out",
                       tmp_path / "o.json", "--server", base) == 3
        finally:
            server.terminate()
            server.wait(timeout=10)


class TestAtomicity:
    def test_no_temp_files_left(self, tmp_path, li_csv):
        out = tmp_path / "fit.json"
        assert run("fit-li", "--data", li_csv, "--params", CALIB,
                   "--out", out) == 0
        leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
        assert leftovers == []

    def test_failed_run_leaves_no_output(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\n")
        out = tmp_path / "fit.json"
        assert run("fit-li", "--data", bad, "--params", CALIB,
                   "--out", out) == 2
        assert not out.exists()
