"""End-to-end CLI: artifacts, determinism, config handling, exit codes."""

import json
import os

import numpy as np
import pytest

from antnet.cli import (CSV_MAGIC, ConfigError, load_config, main,
                        resolve_graph)


def read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def read_summary(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_simulate_artifacts(tmp_path):
    out = tmp_path / "run"
    rc = main(["simulate", "--graph", "losange", "--rule", "uniform-geodesic",
               "--steps", "200", "--replicas", "2", "--seed", "7",
               "--out-dir", str(out), "--check"])
    assert rc == 0
    lines = read_lines(out / "simulate.csv")
    assert lines[0] == CSV_MAGIC
    assert lines[1].split(",")[:2] == ["replica", "n"]
    summary = read_summary(out / "simulate_summary.json")
    assert summary["schema_version"] == 1
    assert summary["config"]["seed"] == 7
    assert summary["replicas_completed"] == 2
    assert summary["h_min"] == 2 and summary["h_max"] == 3
    assert set(summary["terminal_conductance_over_n"]) == {"0", "1"}


def test_byte_identical_rerun(tmp_path):
    args = ["simulate", "--steps", "150", "--replicas", "1", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(a)]) == 0
    assert main(args + ["--out-dir", str(b)]) == 0
    for name in ("simulate.csv", "simulate_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_counterexample_command(tmp_path):
    out = tmp_path / "cex"
    rc = main(["counterexample", "--L", "100", "--steps", "500",
               "--replicas", "2", "--seed", "1", "--out-dir", str(out),
               "--check"])
    assert rc == 0
    summary = read_summary(out / "counterexample_summary.json")
    table = summary["exact_drift_table"]
    assert len(table) == 5
    assert all(row["F"] < 0 for row in table)
    assert summary["replicas_below_0.05"] <= 2


def test_counterexample_check_fails_small_L(tmp_path):
    # at L = 5 the exact drift near zero is positive: check must fail
    rc = main(["counterexample", "--L", "5", "--steps", "50",
               "--replicas", "1", "--out-dir", str(tmp_path / "x"),
               "--check"])
    assert rc == 4


def test_sublinear_command(tmp_path):
    out = tmp_path / "sub"
    rc = main(["sublinear-superlinear", "--alpha", "2.0", "--steps", "2000",
               "--replicas", "10", "--seed", "5", "--out-dir", str(out)])
    assert rc == 0
    summary = read_summary(out / "sublinear_summary.json")
    counts = summary["class_counts"]
    assert sum(counts.values()) == 10


def test_conductance_command(capsys):
    assert main(["conductance", "--graph", "losange",
                 "--weights", "1,1,1,1,1"]) == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(1.0)
    assert main(["conductance", "--sp", "S(P(e,e),e)",
                 "--weights", "1,1,2"]) == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(1.0)


def test_losange_point_command(capsys):
    rc = main(["losange-analytics", "--point", "0.5,0.5,0.5,0.5,0.5",
               "--inequalities"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["in_set_E"] is True
    assert payload["p"]["p135"] == pytest.approx(1 / 13)
    assert payload["inequalities"]["W3"]["status"] == "pass"


def test_losange_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep"
    rc = main(["losange-analytics", "--sweep", "50", "--seed", "11",
               "--out-dir", str(out), "--check"])
    assert rc == 0
    summary = read_summary(out / "losange_sweep_summary.json")
    assert summary["violations"] == 0
    assert summary["worst_slack"]["W3"] >= 0
    lines = read_lines(out / "losange_sweep.csv")
    assert lines[0] == CSV_MAGIC
    assert len(lines) == 52


def test_urn_command(tmp_path):
    out = tmp_path / "urn"
    rc = main(["urn", "--kind", "polya", "--n", "500", "--replicas", "3",
               "--seed", "9", "--out-dir", str(out)])
    assert rc == 0
    summary = read_summary(out / "urn_summary.json")
    q = summary["terminal_fraction"]
    assert 0 <= q["q00"] <= q["q50"] <= q["q100"] <= 1.0 + 1 / 500


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[simulate]\nsteps = 100\nseed = 21  # comment\n")
    out = tmp_path / "out"
    rc = main(["simulate", "--config", str(cfg), "--seed", "99",
               "--out-dir", str(out)])
    assert rc == 0
    summary = read_summary(out / "simulate_summary.json")
    assert summary["config"]["steps"] == 100    # from file
    assert summary["config"]["seed"] == 99      # CLI wins


def test_config_rejections(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[simulate]\nbogus = 1\n")
    assert main(["simulate", "--config", str(bad),
                 "--out-dir", str(tmp_path / "o")]) == 2
    dup = tmp_path / "dup.cfg"
    dup.write_text("[simulate]\nsteps = 1\nsteps = 2\n")
    with pytest.raises(ConfigError):
        load_config(str(dup))
    nosec = tmp_path / "nosec.cfg"
    nosec.write_text("steps = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(nosec))
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"),
                 "--out-dir", str(tmp_path / "o")]) == 2


def test_bad_arguments_exit_2(tmp_path):
    assert main(["simulate", "--graph", "nonsense",
                 "--out-dir", str(tmp_path / "o")]) == 2
    assert main(["losange-analytics", "--point", "1,2,3"]) == 2
    assert main(["losange-analytics"]) == 2
    assert main(["conductance", "--sp", "Q(e)", "--weights", "1"]) == 2


def test_resolve_graph_forms(tmp_path):
    assert resolve_graph("losange").n_edges == 5
    assert resolve_graph("counterexample:4").n_edges == 9
    assert resolve_graph("sp:P(e,e)").n_edges == 2
    assert resolve_graph("double-sierpinski:1").n_vertices > 2
    from antnet.graphs import write_graph, losange
    p = tmp_path / "g.txt"
    write_graph(losange(), p)
    assert resolve_graph(f"file:{p}").n_edges == 5
    with pytest.raises(ConfigError):
        resolve_graph("wat")


def test_csv_numbers_are_locale_free(tmp_path):
    out = tmp_path / "n"
    main(["simulate", "--steps", "120", "--replicas", "1", "--seed", "2",
          "--out-dir", str(out)])
    for line in read_lines(out / "simulate.csv")[2:]:
        for field in line.split(","):
            assert " " not in field
    # summary JSON must be finite (allow_nan=False) and parse cleanly
    s = read_summary(out / "simulate_summary.json")
    flat = json.dumps(s)
    assert "NaN" not in flat and "Infinity" not in flat
