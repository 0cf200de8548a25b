"""Command surface: config parsing, emission, exit codes, file outputs."""
import json

import numpy as np
import pytest

from pinsync.cli import (
    EXIT_DIVERGENCE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    config_from_dict,
    config_to_dict,
    load_config,
    main,
    write_atomic,
)

CONSENSUS_SCENARIO = {
    "cluster_sizes": [2, 2],
    "a": [[-1.0, 1.0, 0.2, -0.2], [1.0, -1.0, -0.2, 0.2],
          [0.2, -0.2, -1.0, 1.0], [-0.2, 0.2, 1.0, -1.0]],
    "b": [[-1.0, 1.0, 0.2, -0.2], [1.0, -1.0, -0.2, 0.2],
          [0.2, -0.2, -1.0, 1.0], [-0.2, 0.2, 1.0, -1.0]],
    "alpha": 5.0, "beta": 5.0, "eps1": 5.0, "eps2": 5.0,
    "p": 0.5, "q": 2.0,
    "dynamics": {"kind": "zero", "n": 2},
    "target_initials": [[1.0, 0.0], [0.0, 1.0]],
}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def consensus_config(tmp_path, output, **extra):
    payload = {
        "scenario": CONSENSUS_SCENARIO,
        "regime": "consensus",
        "integrator": {"step": 1e-3, "t_end": 2.0, "record_stride": 1},
        "delta": 0,
        "seed": 42,
        "output": str(output),
        "formats": ["csv", "json"],
    }
    payload.update(extra)
    return write_config(tmp_path, payload)


class TestConfigRoundTrip:
    def test_inline_round_trip(self, tmp_path):
        cfg = load_config(consensus_config(tmp_path, tmp_path / "out"))
        again = config_from_dict(config_to_dict(cfg), base_dir=tmp_path)
        assert again == cfg
        np.testing.assert_array_equal(again.spec.a, cfg.spec.a)

    def test_preset_round_trip(self, tmp_path):
        path = write_config(tmp_path, {"scenario": "paper-example",
                                       "alpha": 31.0, "beta": 140.0})
        cfg = load_config(path)
        again = config_from_dict(config_to_dict(cfg))
        assert again == cfg
        assert cfg.spec.alpha == 31.0

    def test_matrix_from_file(self, tmp_path):
        np.savetxt(tmp_path / "a.txt", np.asarray(CONSENSUS_SCENARIO["a"]))
        scenario = dict(CONSENSUS_SCENARIO, a="a.txt")
        path = write_config(tmp_path, {"scenario": scenario, "delta": 0})
        cfg = load_config(path)
        np.testing.assert_allclose(cfg.spec.a, CONSENSUS_SCENARIO["a"])

    def test_flag_overrides(self, tmp_path):
        path = consensus_config(tmp_path, tmp_path / "out")
        cfg = load_config(path, {"seed": 7, "step": 1e-4, "t_end": 0.5})
        assert cfg.seed == 7
        assert cfg.integrator.step == 1e-4
        assert cfg.integrator.t_end == 0.5

    @pytest.mark.parametrize("payload", [
        {"scenario": "unknown-name"},
        {"scenario": "paper-example", "delta": "huge"},
        {"scenario": "paper-example", "formats": ["yaml"]},
        {"scenario": {"cluster_sizes": [2]}},
    ])
    def test_malformed_configs(self, payload, tmp_path):
        from pinsync import ConfigError

        path = write_config(tmp_path, payload)
        with pytest.raises(ConfigError):
            load_config(path)


class TestValidateCommand:
    def test_good_config(self, tmp_path, capsys):
        code = main(["validate", "--config",
                     str(consensus_config(tmp_path, tmp_path / "out"))])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "validation passed" in out

    def test_broken_block_reported(self, tmp_path, capsys):
        scenario = json.loads(json.dumps(CONSENSUS_SCENARIO))
        scenario["a"][0] = [-1.0, 1.0, 0.4, -0.2]  # breaks block row sum
        scenario["b"] = scenario["a"]
        path = write_config(tmp_path, {"scenario": scenario, "delta": 0})
        code = main(["validate", "--config", str(path)])
        out = capsys.readouterr().out
        assert code == EXIT_VALIDATION
        assert "FAIL A[1][2] in class A3" in out

    def test_bad_exponent_domain(self, tmp_path, capsys):
        scenario = dict(CONSENSUS_SCENARIO, p=1.5)
        path = write_config(tmp_path, {"scenario": scenario, "delta": 0})
        code = main(["validate", "--config", str(path)])
        out = capsys.readouterr().out
        assert code == EXIT_VALIDATION
        assert "p must lie in (0, 1)" in out


class TestBoundsCommand:
    def test_consensus_bounds_files(self, tmp_path, capsys):
        out_prefix = tmp_path / "out"
        code = main(["bounds", "--config",
                     str(consensus_config(tmp_path, out_prefix))])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "out.bounds.json").read_text())
        assert payload["report"]["regime"] == "cluster-consensus"
        assert payload["thresholds"]["alpha_min"] > 0
        assert json.loads((tmp_path / "out.config.json").read_text())["seed"] == 42

    def test_master_slave_regime(self, tmp_path):
        scenario = {
            "cluster_sizes": [1],
            "a": [[0.0]], "b": [[0.0]],
            "alpha": 1.0, "beta": 1.0, "eps1": 1.0, "eps2": 1.0,
            "p": 0.5, "q": 2.0,
            "dynamics": {"kind": "zero", "n": 1},
            "target_initials": [[0.0]],
        }
        path = write_config(tmp_path, {
            "scenario": scenario, "regime": "master-slave", "delta": 0,
            "output": str(tmp_path / "ms"),
        })
        assert main(["bounds", "--config", str(path)]) == EXIT_OK
        payload = json.loads((tmp_path / "ms.bounds.json").read_text())
        assert payload["report"]["regime"] == "master-slave"
        assert payload["report"]["t_max"] == pytest.approx(3.0855, abs=1e-4)


class TestSimulateCommand:
    def test_writes_outputs_and_summary(self, tmp_path, capsys):
        out_prefix = tmp_path / "run"
        code = main(["simulate", "--config",
                     str(consensus_config(tmp_path, out_prefix))])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "measured settling time" in out
        assert (tmp_path / "run.trajectory.csv").exists()
        payload = json.loads((tmp_path / "run.trajectory.json").read_text())
        assert payload["settling_time"] is not None
        assert payload["report"]["t_max"] is not None
        assert payload["settling_time"] <= payload["report"]["t_max"]

    def test_byte_identical_reruns(self, tmp_path):
        path = consensus_config(tmp_path, tmp_path / "r1")
        assert main(["simulate", "--config", str(path)]) == EXIT_OK
        first = (tmp_path / "r1.trajectory.csv").read_bytes()
        assert main(["simulate", "--config", str(path),
                     "--output", str(tmp_path / "r2")]) == EXIT_OK
        second = (tmp_path / "r2.trajectory.csv").read_bytes()
        assert first == second

    def test_divergence_exit_code(self, tmp_path, capsys):
        scenario = {
            "cluster_sizes": [1],
            "a": [[0.0]], "b": [[0.0]],
            "alpha": 1.0, "beta": 1.0, "eps1": 0.0, "eps2": 0.0,
            "p": 0.5, "q": 2.0,
            "dynamics": {"kind": "linear_activation", "w1": [[300.0]],
                         "w2": [[0.0]], "activation": "identity"},
            "target_initials": [[0.0]],
        }
        path = write_config(tmp_path, {
            "scenario": scenario, "regime": "master-slave", "delta": 0,
            "integrator": {"step": 1e-3, "t_end": 4.0},
            "output": str(tmp_path / "boom"),
        })
        assert main(["simulate", "--config", str(path)]) == EXIT_DIVERGENCE


class TestSweepCommand:
    def test_sweep_outputs(self, tmp_path, capsys):
        path = consensus_config(tmp_path, tmp_path / "sw")
        code = main(["sweep", "--config", str(path), "--param", "alpha",
                     "--values", "6,12"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "monotone decreasing: True" in out
        lines = (tmp_path / "sw.sweep.csv").read_text().splitlines()
        assert lines[0] == "param_value,settling_measured,T_max_theoretical,feasible"
        assert len(lines) == 3
        rows = json.loads((tmp_path / "sw.sweep.json").read_text())
        assert [r["value"] for r in rows] == [6.0, 12.0]

    def test_bad_values_parse_error(self, tmp_path):
        path = consensus_config(tmp_path, tmp_path / "sw")
        assert main(["sweep", "--config", str(path), "--param", "alpha",
                     "--values", "6,twelve"]) == EXIT_PARSE


class TestPaperExampleCommand:
    def test_summary_flags_known_discrepancies(self, tmp_path, capsys):
        code = main(["paper-example", "--output", str(tmp_path / "ref"),
                     "--t-end", "0.5", "--step", "1e-4"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "ref.summary.json").read_text())
        comparison = {row["name"]: row for row in summary["comparison"]}
        # Reproducible constants agree...
        for name in ("rho1", "rho2", "nbar", "alpha_bar_per_alpha",
                     "beta_bar_per_beta", "gamma1", "alpha_threshold"):
            assert comparison[name]["agrees"], name
        # ...while the formula value of gamma2 is emitted next to the stated
        # one with a disagreement flag, and the stated settling bound is not
        # adopted.
        assert comparison["gamma2"]["computed"] == pytest.approx(0.7637, abs=1e-3)
        assert comparison["gamma2"]["reported"] == 0.5091
        assert not comparison["gamma2"]["agrees"]
        # The stated beta threshold inherits the gamma2 inconsistency.
        assert comparison["beta_threshold"]["computed"] == pytest.approx(131.247,
                                                                         abs=0.05)
        assert not comparison["beta_threshold"]["agrees"]
        assert not comparison["t_max_at_reference_gains"]["agrees"]
        assert comparison["t_max_at_reference_gains"]["computed"] is None
        assert summary["report"]["gamma2"] == pytest.approx(0.7637, abs=1e-3)
        assert "DISAGREE" in out

    def test_runs_at_custom_gains(self, tmp_path):
        code = main(["paper-example", "--output", str(tmp_path / "ref2"),
                     "--alpha", "35", "--beta", "150", "--t-end", "0.5",
                     "--step", "1e-4"])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "ref2.summary.json").read_text())
        assert summary["report"]["feasible_alpha"]
        assert summary["report"]["feasible_beta"]
        assert summary["report"]["t_max"] is not None


class TestParseErrors:
    def test_missing_config_file(self, tmp_path):
        assert main(["bounds", "--config", str(tmp_path / "nope.json")]) == EXIT_PARSE

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["bounds", "--config", str(path)]) == EXIT_PARSE

    def test_unknown_flag_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bounds", "--frobnicate"])
        assert exc.value.code == EXIT_PARSE

    def test_bad_format_flag(self, tmp_path):
        path = consensus_config(tmp_path, tmp_path / "out")
        assert main(["bounds", "--config", str(path),
                     "--format", "xml"]) == EXIT_PARSE


class TestAtomicWrite:
    def test_creates_parents_and_replaces(self, tmp_path):
        target = tmp_path / "deep" / "dir" / "file.txt"
        write_atomic(target, "one")
        write_atomic(target, "two")
        assert target.read_text() == "two"
        assert list(target.parent.glob("*.tmp")) == []
