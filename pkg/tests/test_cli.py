import json

import numpy as np
import pytest

from freedeconv import io
from freedeconv.cli import main
from freedeconv.errors import RecoveryError


@pytest.fixture
def measures(tmp_path):
    add = tmp_path / "add.json"
    add.write_text(json.dumps({"atoms": [-1.0, 0.2, 1.0], "weights": [0.25, 0.5, 0.25]}))
    mul = tmp_path / "mul.json"
    mul.write_text(json.dumps({"atoms": [0.2, 0.6, 1.0], "weights": [1 / 3, 1 / 3, 1 / 3]}))
    return add, mul


def simulate(tmp_path, measure, model, noise, name):
    out = tmp_path / name
    rc = main(["simulate", "--model", model, "--measure", str(measure), "--N", "1024",
               "--noise", str(noise), "--out", str(out), "--quiet"])
    assert rc == 0
    return out


class TestSimulate:
    def test_line_count(self, tmp_path, measures):
        out = simulate(tmp_path, measures[0], "additive", 0.25, "s.txt")
        assert len(out.read_text().splitlines()) == 1024

    def test_zero_sigma_gives_signal(self, tmp_path, measures):
        out = simulate(tmp_path, measures[0], "additive", 0.0, "s.txt")
        values = np.array([float(v) for v in out.read_text().split()])
        np.testing.assert_array_equal(values, np.repeat([-1.0, 0.2, 1.0], [256, 512, 256]))

    def test_prints_realized_q(self, tmp_path, measures, capsys):
        rc = main(["simulate", "--model", "multiplicative", "--measure", str(measures[1]),
                   "--N", "1024", "--noise", "0.75", "--out", str(tmp_path / "s.txt")])
        assert rc == 0
        assert "T=1365" in capsys.readouterr().out

    def test_missing_measure(self, tmp_path, capsys):
        rc = main(["simulate", "--model", "additive", "--measure", str(tmp_path / "none.json"),
                   "--N", "16", "--noise", "1", "--out", str(tmp_path / "s.txt")])
        assert rc == 2
        assert "measure" in capsys.readouterr().err

    def test_negative_noise(self, tmp_path, measures, capsys):
        rc = main(["simulate", "--model", "additive", "--measure", str(measures[0]),
                   "--N", "16", "--noise", "-1", "--out", str(tmp_path / "s.txt")])
        assert rc == 2
        assert "noise" in capsys.readouterr().err

    def test_multiplicative_needs_positive_atoms(self, tmp_path, measures):
        rc = main(["simulate", "--model", "multiplicative", "--measure", str(measures[0]),
                   "--N", "16", "--noise", "0.5", "--out", str(tmp_path / "s.txt")])
        assert rc == 2


class TestRecover:
    def test_known_sigma(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 1.25, "s.txt")
        out = tmp_path / "r.json"
        rc = main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                   "--noise", "1.25", "--out", str(out), "--quiet"])
        assert rc == 0
        report = json.loads(out.read_text())
        atoms = report["recovered_measure"]["atoms"]
        np.testing.assert_allclose(atoms, [-1.0, 0.2, 1.0], atol=0.05)
        assert report["noise"] is None
        assert "wall_time" not in report
        assert report["config_echo"]["eigenmatrix"]["n_c"] == 256

    def test_estimate_q(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[1], "multiplicative", 0.75, "s.txt")
        out = tmp_path / "r.json"
        rc = main(["recover", "--model", "multiplicative", "--spectrum", str(spec), "--n", "3",
                   "--estimate", "--out", str(out), "--quiet", "--timing"])
        assert rc == 0
        report = json.loads(out.read_text())
        noise = report["noise"]
        land = noise["landscape"]
        losses = [np.inf if v is None or s != "ok" else v
                  for v, s in zip(land["loss_values"], land["status"])]
        assert land["parameter_grid"][int(np.argmin(losses))] == noise["initial_guess"]
        assert abs(noise["estimate"] - 0.75) < 0.05
        assert report["wall_time"] > 0

    def test_noise_and_estimate_exclusive(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        rc = main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                   "--noise", "0.5", "--estimate"])
        assert rc == 2

    def test_neither_noise_nor_estimate(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        assert main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3"]) == 2

    def test_numerical_failure_names_stage(self, tmp_path, measures, capsys, monkeypatch):
        import freedeconv.pipeline

        def broken(*args, **kwargs):
            raise RecoveryError("Krylov matrix has numerical rank 0", stage="esprit")

        monkeypatch.setattr(freedeconv.pipeline, "recover_measure", broken)
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        rc = main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                   "--noise", "0.5", "--quiet"])
        assert rc == 3
        assert "[esprit]" in capsys.readouterr().err

    def test_bad_n(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        assert main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "99",
                     "--estimate"]) == 2
        assert main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                     "--nl", "2", "--noise", "0.5"]) == 2

    def test_replay_bit_identical(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.75, "s.txt")
        first = tmp_path / "r.json"
        assert main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                     "--estimate", "--range", "0.2,1.2", "--grid", "12", "--nz", "48",
                     "--out", str(first), "--quiet"]) == 0
        second = tmp_path / "r2.json"
        assert main(["replay", str(first), "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_replay_detects_changed_spectrum(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.75, "s.txt")
        first = tmp_path / "r.json"
        main(["recover", "--model", "additive", "--spectrum", str(spec), "--n", "3",
              "--noise", "0.75", "--out", str(first), "--quiet"])
        spec.write_text(spec.read_text() + "0.0\n")
        assert main(["replay", str(first), "--out", str(tmp_path / "x.json")]) == 2


class TestLandscape:
    def test_oracle_minimum(self, tmp_path, measures):
        out = tmp_path / "l.csv"
        rc = main(["landscape", "--model", "additive", "--oracle", str(measures[0]),
                   "--true-noise", "0.75", "--n", "3", "--range", "0.1,1.5", "--grid", "50",
                   "--out", str(out)])
        assert rc == 0
        params, curves, _ = io.read_landscape(out)
        assert params.size == 50
        assert params[np.nanargmin(curves[3])] == params[np.argmin(np.abs(params - 0.75))]

    def test_header(self, tmp_path, measures, capsys):
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        args = ["landscape", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                "--grid", "5"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        header = first.splitlines()[0].split(",")
        assert header[0] == "parameter" and header[1] == "log_s1" and header[-1] == "status"

    def test_grid_of_one(self, tmp_path, measures):
        spec = simulate(tmp_path, measures[0], "additive", 0.5, "s.txt")
        assert main(["landscape", "--model", "additive", "--spectrum", str(spec), "--n", "3",
                     "--grid", "1"]) == 2

    def test_all_points_fail(self, tmp_path, capsys):
        spec = tmp_path / "s.txt"
        spec.write_text("0.5\n0.5\n")
        rc = main(["landscape", "--model", "additive", "--spectrum", str(spec), "--n", "1",
                   "--range=-2,-1", "--grid", "3"])
        assert rc == 3


class TestReproduce:
    def test_a1_echo(self, tmp_path):
        out = tmp_path / "a1"
        assert main(["reproduce", "a1", "--out", str(out), "--quiet"]) == 0
        echo = json.loads((out / "report.json").read_text())["config_echo"]
        assert echo["N"] == 1024 and echo["sigma"] == 0.25
        assert echo["measure"] == {"atoms": [-1.0, 0.2, 1.0], "weights": [0.25, 0.5, 0.25]}
        for name in ("spectrum.txt", "landscape.csv", "histogram.csv"):
            assert (out / name).exists()
        edges, counts = io.read_histogram(out / "histogram.csv")
        assert counts.sum() == 1024 and edges.size == counts.size + 1

    def test_m2_echo(self, tmp_path):
        out = tmp_path / "m2"
        assert main(["reproduce", "m2", "--out", str(out), "--quiet"]) == 0
        echo = json.loads((out / "report.json").read_text())["config_echo"]
        assert echo["q"] == 0.5
        assert echo["measure"]["atoms"] == [0.2, 0.6, 1.0]
        np.testing.assert_allclose(echo["measure"]["weights"], [1 / 3] * 3, rtol=1e-15)

    def test_unknown_id(self, capsys):
        assert main(["reproduce", "x9"]) == 2
        assert "x9" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["--help"]) == 0
