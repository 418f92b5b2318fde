"""Command-line driver: exit codes, manifests, config merging, file formats."""

import csv
import json

import pytest

from ddw.cli import NONEMPTY_THRESHOLD, main


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_no_command_prints_help_and_exits_2(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().out.lower()


def test_sato_solve_golden_value_and_determinism(tmp_path):
    out1 = str(tmp_path / "a.json")
    out2 = str(tmp_path / "b.json")
    assert main(["sato-solve", "--K", "1.0", "--out", out1]) == 0
    assert main(["sato-solve", "--K", "1.0", "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()

    doc = _read_json(out1)
    assert doc["u"] == pytest.approx(0.38823829470675014, rel=1e-10)
    assert doc["p"] == pytest.approx(doc["u"] / 2.0, rel=1e-15)
    assert doc["residual"] <= 1e-10

    man = _read_json(out1 + ".manifest.json")
    assert man["artifact"] == "ddw"
    assert "version" in man
    cfg = man["config"]
    assert cfg["command"] == "sato-solve"
    assert cfg["K"] == 1.0
    assert "func" not in cfg and "config" not in cfg
    assert "seed" in cfg and "out" in cfg


def test_sato_solve_bad_K_exits_2(tmp_path):
    out = str(tmp_path / "bad.json")
    assert main(["sato-solve", "--K", "-1.0", "--out", out]) == 2


def test_config_file_fills_gaps_but_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\ntol=1e-6\n")
    out = str(tmp_path / "c.json")
    assert main(
        ["sato-solve", "--K", "1.0", "--config", str(cfg), "--out", out]
    ) == 0
    assert _read_json(out)["tol"] == 1e-6

    out2 = str(tmp_path / "d.json")
    assert main(
        [
            "sato-solve", "--K", "1.0", "--tol", "1e-12",
            "--config", str(cfg), "--out", out2,
        ]
    ) == 0
    assert _read_json(out2)["tol"] == 1e-12


def test_config_dash_keys_and_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tv-limit=0.5\n")
    out = str(tmp_path / "e.json")
    code = main(
        [
            "sticky-check", "--theta", "0.5", "--steps", "3",
            "--replicas", "2000", "--config", str(cfg), "--out", out,
        ]
    )
    assert code == 0
    assert _read_json(out)["tv_limit"] == 0.5

    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus=1\n")
    assert main(
        ["sato-solve", "--K", "1.0", "--config", str(bad), "--out", out]
    ) == 2


def test_config_reserved_and_malformed(tmp_path):
    cfg = tmp_path / "f.cfg"
    cfg.write_text("func=boom\n")
    out = str(tmp_path / "f.json")
    assert main(["sato-solve", "--K", "1.0", "--config", str(cfg), "--out", out]) == 2
    cfg.write_text("no equals sign here\n")
    assert main(["sato-solve", "--K", "1.0", "--config", str(cfg), "--out", out]) == 2
    assert main(
        ["sato-solve", "--K", "1.0", "--config", str(tmp_path / "nope.cfg"), "--out", out]
    ) == 2


def test_sticky_check_passes_and_reports(tmp_path):
    out = str(tmp_path / "sticky.json")
    code = main(
        [
            "sticky-check", "--theta", "0.5", "--steps", "4",
            "--replicas", "20000", "--tv-limit", "0.05", "--out", out,
        ]
    )
    assert code == 0
    doc = _read_json(out)
    assert doc["pass"] is True
    assert 0.0 <= doc["tv"] < 0.05
    assert doc["tv_boot_low"] <= doc["tv"] <= doc["tv_boot_high"]


def test_sticky_check_forced_failure_exits_3(tmp_path, capsys):
    out = str(tmp_path / "sticky-fail.json")
    code = main(
        [
            "sticky-check", "--theta", "0.5", "--steps", "4",
            "--replicas", "2000", "--tv-limit", "1e-6", "--out", out,
        ]
    )
    assert code == 3
    assert "check failed" in capsys.readouterr().err
    assert _read_json(out)["pass"] is False  # report still written


def test_scan_output_measures_non_increasing(tmp_path):
    out = str(tmp_path / "scan.json")
    code = main(
        [
            "scan", "--gamma", "3.0", "--levels", "2", "--replicas", "3",
            "--s-max", "1.0", "--seed", "5", "--out", out,
        ]
    )
    assert code == 0
    doc = _read_json(out)
    assert len(doc["results"]) == 3
    for res in doc["results"]:
        m = res["measures"]
        assert len(m) == 3
        assert all(b <= a + 1e-15 for a, b in zip(m, m[1:]))
        assert res["deepest_nonempty"] == max(
            (k for k, iv in enumerate(res["intervals"]) if iv), default=-1
        )


def test_nonempty_prob_report(tmp_path):
    out = str(tmp_path / "ne.json")
    code = main(
        [
            "nonempty-prob", "--gamma", "3.0", "--levels", "2",
            "--replicas", "400", "--out", out,
        ]
    )
    assert code == 0
    doc = _read_json(out)
    assert 0.0 <= doc["ci_low"] <= doc["p_hat"] <= doc["ci_high"] <= 1.0
    assert sum(doc["deepest_histogram"].values()) == 400
    assert doc["pinned_threshold"] == NONEMPTY_THRESHOLD
    man = _read_json(out + ".manifest.json")
    assert "threshold_basis" in man["notes"]


def test_trace_s_csv_shape(tmp_path):
    out = str(tmp_path / "trace.csv")
    code = main(
        [
            "trace-s", "--horizon", "50", "--s-hi", "2.0",
            "--seed", "3", "--out", out,
        ]
    )
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["s", "value"]
    assert float(rows[0][0]) == 0.0
    svals = [float(r[0]) for r in rows]
    assert svals == sorted(svals)
    man = _read_json(out + ".manifest.json")
    assert man["notes"]["pieces"] == len(rows)
    assert man["config"]["s_max"] == 2.0  # defaulted to the sweep window top


def test_simulate_web_csv_shape_and_determinism(tmp_path):
    out1 = str(tmp_path / "web1.csv")
    out2 = str(tmp_path / "web2.csv")
    argv = ["simulate-web", "--horizon", "30", "--s-hi", "1.0", "--seed", "9"]
    assert main(argv + ["--out", out1]) == 0
    assert main(argv + ["--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()
    header, rows = _read_csv(out1)
    assert header == ["s", "t", "position"]
    pieces = _read_json(out1 + ".manifest.json")["notes"]["pieces"]
    assert len(rows) == pieces * 31
    assert [int(r[1]) for r in rows[:31]] == list(range(31))


def test_dim_fit_bad_eps_list_exits_2(tmp_path):
    out = str(tmp_path / "dim.json")
    assert main(["dim-fit", "--K", "2.0", "--eps-list", "4,x", "--out", out]) == 2


def test_bounds_golden(tmp_path):
    out = str(tmp_path / "bounds.json")
    assert main(["bounds", "--K", "2.0", "--l", "0.9", "--out", out]) == 0
    doc = _read_json(out)
    assert doc["lower"] == pytest.approx(0.14908014207431308, rel=1e-9)
    assert doc["upper"] == pytest.approx(0.9345317557914875, rel=1e-9)
    assert doc["prob_A"] == pytest.approx(0.2417303374571288, rel=1e-12)


def test_fp_exponent_small_run(tmp_path):
    out = str(tmp_path / "fp.json")
    code = main(
        [
            "fp-exponent", "--K", "1.0", "--k", "1.0", "--tmax", "1e3",
            "--replicas", "2000", "--out", out,
        ]
    )
    assert code == 0
    doc = _read_json(out)
    assert doc["theory"] == pytest.approx(-0.19411914735337507, rel=1e-9)
    assert doc["abs_error"] < 0.15
    assert len(doc["grid"]) == len(doc["survivors"]) == len(doc["p_hat"])


def test_threads_flag_validation(tmp_path):
    out = str(tmp_path / "t.json")
    assert main(["sato-solve", "--K", "1.0", "--threads", "1", "--out", out]) == 0
    assert main(["sato-solve", "--K", "1.0", "--threads", "0", "--out", out]) == 2


def test_env_seed_default(tmp_path, monkeypatch):
    monkeypatch.setenv("DDW_SEED", "7")
    out = str(tmp_path / "env.json")
    assert main(["sato-solve", "--K", "1.0", "--out", out]) == 0
    assert _read_json(out + ".manifest.json")["config"]["seed"] == 7


def test_unwritable_out_exits_2(tmp_path):
    out = str(tmp_path / "no-such-dir" / "x.json")
    assert main(["sato-solve", "--K", "1.0", "--out", out]) == 2


def test_appendix_check_small_run(tmp_path):
    out = str(tmp_path / "appendix.json")
    code = main(
        [
            "appendix-check", "--epsilon", "0.1", "--exits", "20000",
            "--dt", "1e-4", "--gof-replicas", "3000",
            "--survival-replicas", "3000", "--out", out,
        ]
    )
    assert code == 0
    doc = _read_json(out)
    assert doc["exit_probability"]["pass"] is True
    assert doc["coupling_gof"]["pass"] is True
    assert len(doc["survival_compare"]) == 3
    for row in doc["survival_compare"]:
        assert 0.0 <= row["walk_p"] <= 1.0
