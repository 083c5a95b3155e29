import json
import subprocess
import sys

import pytest

from hems.cli import main


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


class TestCheck:
    def test_reference_config(self, tmp_path, capsys, cfg):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        doc = run_json(capsys, ["check", "--config", str(path)])
        assert doc["params"]["V"] == pytest.approx(3.29318, rel=1e-5)
        assert doc["bounds"]["d_max"] == 5

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"epsilon": 0.9}))
        assert main(["check", "--config", str(path)]) == 1
        assert "19" in capsys.readouterr().err

    def test_v_override_out_of_range(self, capsys):
        assert main(["check", "--v", "10"]) == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["check", "--config", str(tmp_path / "nope.json")]) == 2

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["sweep", "--param", "gamma"])
        assert info.value.code == 1


class TestSimulate:
    def test_b3_matches_zero_ess(self, tmp_path):
        zero = tmp_path / "zero.json"
        zero.write_text(json.dumps({"u_cmax": 0, "u_dmax": 0}))
        assert main(["simulate", "--policy", "b3", "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate", "--policy", "proposed", "--config", str(zero),
                     "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "slots.csv").read_bytes() == (tmp_path / "b" / "slots.csv").read_bytes()

    def test_outputs(self, tmp_path):
        assert main(["simulate", "--gamma", "0.01", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["policy"] == "proposed"
        assert summary["params"]["gamma"] == 0.01
        assert (tmp_path / "slots.csv").read_text().startswith("t,e,x,y,g,T,Q,Z,G,H,K,phi1,phi2,occupied_next\n")

    def test_trace_and_ev_files(self, tmp_path):
        trace, ev = tmp_path / "trace.csv", tmp_path / "ev.csv"
        assert main(["gen-trace", "--days", "3", "--seed", "4", "--out", str(trace),
                     "--ev-out", str(ev)]) == 0
        out = tmp_path / "run"
        assert main(["simulate", "--trace", str(trace), "--ev", str(ev), "--out", str(out)]) == 0
        assert len((out / "slots.csv").read_text().splitlines()) == 72

    def test_bad_trace_reports_line(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("t,T_out,B,rho,pi,T_ref\n0,5,0.5,0,1,22.5\n1,x,0.5,0,1,22.5\n")
        assert main(["simulate", "--trace", str(trace), "--no-ev", "--out", str(tmp_path)]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert main(["simulate", "--seed", "8", "--out", str(tmp_path / name)]) == 0
        for f in ("slots.csv", "summary.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


class TestSweep:
    def test_sixteen_rows_and_order_independent_of_pool(self, tmp_path, monkeypatch):
        outputs = []
        for threads in ("1", "3"):
            monkeypatch.setenv("HEMS_THREADS", threads)
            out = tmp_path / threads
            assert main(["sweep", "--param", "gamma", "--values", "0,0.002,0.01,0.02",
                         "--out", str(out)]) == 0
            outputs.append((out / "sweep.csv").read_bytes())
        assert outputs[0] == outputs[1]
        lines = outputs[0].decode().splitlines()
        assert len(lines) == 17
        assert [ln.split(",")[0] for ln in lines[1:5]] == ["proposed", "b1", "b2", "b3"]

    def test_v_axis(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HEMS_THREADS", "1")
        assert main(["sweep", "--param", "v", "--values", "1,2", "--no-ev", "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
        v_col = [r.split(",")[3] for r in rows if r.startswith("proposed")]
        assert v_col == ["1", "2"]

    def test_bad_values(self, tmp_path):
        assert main(["sweep", "--param", "gamma", "--values", "a,b", "--out", str(tmp_path)]) == 1

    def test_bad_thread_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HEMS_THREADS", "many")
        assert main(["sweep", "--param", "gamma", "--values", "0", "--out", str(tmp_path)]) == 1


class TestOracle:
    def test_reports_gap(self, capsys):
        doc = run_json(capsys, ["oracle", "--samples", "50", "--grid", "7", "--seed", "2"])
        assert doc["violations"] == 0
        assert doc["samples"] == 50


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "hems.cli", "check"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["bounds"]["d_max"] == 5
