import json
import math

import pytest

from swapnet import cli

FULL = """\
[DEFAULT]
seed = 2024
mean_counts = 1000

[fig3a]
[fig3d]
theta_points = 5
[fig4a]
[purity_check]
experiment = purity
state = quartz
[hs]
experiment = hsdist
state_a = H
state_b = mixed
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_curve(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_or_phase,oracle_value,estimate"
    return [tuple(map(float, line.split(","))) for line in lines[1:]]


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


class TestPresets:
    def test_listing(self, capsys):
        assert cli.main(["presets"]) == 0
        out = capsys.readouterr().out
        lines = {line.split()[0]: line for line in out.splitlines()}
        assert set(lines) == {"fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4c"}
        assert "|HV> +/- sin2t|VH>" in lines["fig3d"]
        assert "(|HV> + |VH>)/sqrt2" in lines["fig4c"]

    def test_stable(self):
        assert cli.list_presets() == cli.list_presets()


class TestValidate:
    def test_ok(self, tmp_path, capsys):
        assert cli.main(["validate", write(tmp_path, FULL)]) == 0
        assert capsys.readouterr().out.strip() == "OK"
        assert not (tmp_path / "swapnet_out").exists()

    def test_two_phase_points(self, tmp_path, capsys):
        assert cli.main(["validate", write(tmp_path, "[fig3a]\nphase_points = 2\n")]) == 2
        assert "phase_points" in capsys.readouterr().err

    def test_werner_out_of_range(self, tmp_path, capsys):
        cfg = "[w]\nexperiment = witness_sweep\nstate = werner:1.5\n"
        assert cli.main(["validate", write(tmp_path, cfg)]) == 2
        assert "[0, 1]" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["validate", str(tmp_path / "nope.ini")]) == 4

    @pytest.mark.parametrize(
        "text",
        [
            "[fig3a]\ncolour = blue\n",
            "[x]\nexperiment = teleport\n",
            "[x]\nexperiment = purity\n",
            "[fig3a]\nseed = -1\n",
            "[fig3a]\nmean_counts = 0\n",
            "[fig3a]\nepsilon = 2\n",
            "[fig3d]\nsign = *\n",
            "[fig4a]\nlock_phase = 1.5707963267948966\n",
            "[w]\nexperiment = witness_locked\nstates = singlet;HH\n",
            "[o]\nexperiment = overlap\nstate_a = HH\nstate_b = H\n",
            "not an ini file",
        ],
    )
    def test_rejects(self, tmp_path, text):
        assert cli.main(["validate", write(tmp_path, text)]) == 2


class TestRun:
    def test_full(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", write(tmp_path, FULL), "--output", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        names = [e["name"] for e in manifest["experiments"]]
        assert names == ["fig3a", "fig3d", "fig4a", "purity_check", "hs"]
        by_name = dict(zip(names, manifest["experiments"]))
        assert by_name["fig4a"]["verdict"]["verdict"] == "Entangled"
        assert by_name["purity_check"]["report"]["oracle"] == pytest.approx(0.6682, abs=1e-12)
        for p in by_name["fig3d"]["points"]:
            assert p["concurrence_oracle"] == pytest.approx(abs(math.sin(4 * p["theta"])), abs=1e-12)
            assert p["abs_error"] == abs(p["estimate"] - p["oracle"])
        rows = read_curve(out / "fig3a" / "curve.csv")
        assert len(rows) == 19
        for theta, oracle, est in rows:
            assert abs(oracle - math.cos(2 * theta) ** 2) < 1e-12
            assert abs(est - oracle) <= 0.03
        assert (out / "fig4a" / "counts" / "locked.csv").exists()
        assert (out / "purity_check" / "counts" / "sweep_target.csv").exists()
        assert len(list((out / "hs" / "counts").glob("*.csv"))) == 6
        assert "fig4a: Entangled" in capsys.readouterr().out

    def test_non_psd_writes_nothing(self, tmp_path):
        cfg = "[w]\nexperiment = witness_sweep\nstate = [[1,0,0,0],[0,0,0,0],[0,0,0.5,0],[0,0,0,-0.5]]\n"
        out = tmp_path / "out"
        assert cli.main(["run", write(tmp_path, cfg), "--output", str(out)]) == 2
        assert not out.exists()

    def test_estimator_failure(self, tmp_path):
        cfg = "[p]\nexperiment = purity\nstate = H\nmean_counts = 1e-12\n"
        assert cli.main(["run", write(tmp_path, cfg), "--output", str(tmp_path / "o")]) == 3

    def test_env_output(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envout"))
        assert cli.main(["run", write(tmp_path, "[fig4c]\n")]) == 0
        assert (tmp_path / "envout" / "fig4c" / "report.txt").read_text().startswith("verdict=Inconclusive")

    def test_overrides(self, tmp_path):
        cfg = write(tmp_path, "[fig3c]\ntheta_points = 3\n")
        assert cli.main(["run", cfg, "--output", str(tmp_path / "a"), "--seed", "5", "--mean-counts", "2000"]) == 0
        exp = json.loads((tmp_path / "a" / "manifest.json").read_text())["experiments"][0]
        assert exp["config"]["seed"] == "5" and exp["config"]["mean_counts"] == "2000.0"

    def test_deterministic_and_schedule_free(self, tmp_path):
        cfg = write(tmp_path, "[fig3b]\ntheta_points = 7\ndrift_sigma = 0.01\n")
        cli.main(["run", cfg, "--output", str(tmp_path / "a")])
        cli.main(["run", cfg, "--output", str(tmp_path / "b")])
        cli.main(["run", cfg, "--output", str(tmp_path / "c"), "--workers", "4"])
        a = snapshot(tmp_path / "a")
        assert a and a == snapshot(tmp_path / "b") == snapshot(tmp_path / "c")

    def test_oracle_column_seed_free(self, tmp_path):
        cfg = write(tmp_path, "[fig3b]\ntheta_points = 5\n")
        cli.main(["run", cfg, "--output", str(tmp_path / "a"), "--seed", "1"])
        cli.main(["run", cfg, "--output", str(tmp_path / "b"), "--seed", "2"])
        a = read_curve(tmp_path / "a" / "fig3b" / "curve.csv")
        b = read_curve(tmp_path / "b" / "fig3b" / "curve.csv")
        assert [r[:2] for r in a] == [r[:2] for r in b]
        assert [r[2] for r in a] != [r[2] for r in b]
