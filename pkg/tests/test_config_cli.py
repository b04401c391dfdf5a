"""Configuration parsing, report determinism, CLI behavior, presets."""

import copy
import json
import os

import numpy as np
import pytest

from mmotsig import ConfigError
from mmotsig.cli import main
from mmotsig.config import parse_config
from mmotsig import presets, report


BASE_CONFIG = {
    "version": 1,
    "cost": {"kind": "builtin", "name": "bilinear", "dims": [1, 1],
             "pairs": [{"i": 1, "j": 2, "value": -1.0}]},
    "points": [[[0.25], [0.5]]],
    "solve": {"grids": [{"values": [0.0, 0.5, 1.0]},
                        {"values": [0.0, 0.5, 1.0]}], "radius": 1.0},
    "checks": {"two_monotone": True, "projection": True, "box": [[0.0, 1.0], [0.0, 1.0]]},
}


def run_cli(args):
    return main(args)


def test_parse_full_config():
    cfg = parse_config(copy.deepcopy(BASE_CONFIG))
    assert cfg.cost.m == 2
    assert len(cfg.points) == 1
    assert cfg.solve is not None and cfg.solve.radius == 1.0
    assert cfg.checks.two_monotone and not cfg.checks.compatibility
    assert cfg.seed == 0 and cfg.zero_tol is None
    assert len(cfg.config_hash) == 64


def test_all_violations_reported_together():
    bad = {
        "version": 3,
        "unknown_top": 1,
        "cost": {"kind": "builtin", "name": "no_such"},
        "weights": {"mode": "wat"},
        "checks": {"samples": 5, "bogus_switch": True},
        "output": {"format": "xml"},
    }
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    paths = {p for p, _ in exc.value.errors}
    assert {"version", "unknown_top", "cost.name", "weights.mode",
            "checks.samples", "checks.bogus_switch", "output.format"} <= paths


def test_invalid_json_and_shape():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_point_dimension_errors_carry_index():
    cfg = copy.deepcopy(BASE_CONFIG)
    cfg["points"] = [[[0.1], [0.2]], [[0.1, 0.3], [0.2]], [[0.1]]]
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg)
    paths = {p for p, _ in exc.value.errors}
    assert paths == {"points[1]", "points[2]"}


def test_sweep_expansion_and_guard():
    cfg = copy.deepcopy(BASE_CONFIG)
    del cfg["points"]
    cfg["sweep"] = {"low": [0.0, 0.0], "high": [1.0, 1.0], "counts": [3, 4]}
    parsed = parse_config(cfg)
    assert len(parsed.points) == 12
    assert parsed.points[0] == [[0.0], [0.0]]
    cfg["sweep"]["counts"] = [30, 30]
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg)
    assert any("guard" in msg for _, msg in exc.value.errors)
    cfg["sweep"]["counts"] = [3, 4]
    cfg["points"] = [[[0.0], [0.0]]]
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_weights_modes():
    cfg = copy.deepcopy(BASE_CONFIG)
    cfg["weights"] = {"mode": "single_partition", "plus": [1]}
    assert parse_config(cfg).weights.coefficient(1, 2) == 1.0
    cfg["weights"] = {"mode": "explicit",
                      "terms": [{"plus": [1], "weight": 1.0}]}
    assert parse_config(cfg).weights.coefficient(1, 2) == 1.0
    cfg["weights"] = {"mode": "explicit",
                      "terms": [{"plus": [1], "weight": 0.25}]}
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_config_hash_is_canonical():
    a = parse_config(copy.deepcopy(BASE_CONFIG))
    reordered = json.loads(json.dumps(copy.deepcopy(BASE_CONFIG), sort_keys=True))
    b = parse_config(reordered)
    assert a.config_hash == b.config_hash
    changed = copy.deepcopy(BASE_CONFIG)
    changed["solve"]["radius"] = 0.5
    assert parse_config(changed).config_hash != a.config_hash


def test_report_determinism_except_timestamp(tmp_path):
    cfg = parse_config(copy.deepcopy(BASE_CONFIG))
    rep1, _ = report.run(cfg)
    rep2, _ = report.run(cfg)
    t1, t2 = rep1.pop("timestamp"), rep2.pop("timestamp")
    assert rep1 == rep2
    assert json.dumps(rep1, sort_keys=True) == json.dumps(rep2, sort_keys=True)


def test_written_report_is_deterministic(tmp_path, tmp_json):
    cpath = tmp_json("cfg.json", BASE_CONFIG)
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run_cli(["run", "--config", cpath, "--out", str(out1), "--quiet"]) == 0
    assert run_cli(["run", "--config", cpath, "--out", str(out2), "--quiet"]) == 0
    d1, d2 = json.loads(out1.read_text()), json.loads(out2.read_text())
    d1.pop("timestamp"), d2.pop("timestamp")
    # plan/certificate exports differ only in their directory prefix
    for d, stem in ((d1, "r1"), (d2, "r2")):
        ex = d["solves"][0].get("exports", {})
        for key, val in list(ex.items()):
            ex[key] = os.path.basename(val).replace(stem, "STEM")
    assert d1 == d2
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_cli_exit_codes(tmp_path, tmp_json):
    bad = tmp_json("bad.json", {"cost": {"kind": "builtin", "name": "no"}})
    assert run_cli(["run", "--config", bad, "--quiet"]) == 1
    assert run_cli(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert run_cli(["presets", "run", "no-such-preset"]) == 1
    good = tmp_json("good.json", BASE_CONFIG)
    assert run_cli(["run", "--config", good, "--quiet"]) == 0


def test_cli_assert_flags_failing_checks(tmp_json):
    # a convex pairwise cost is incompatible; --assert must turn that into
    # a nonzero exit
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 3, "Q": [[1.0]]},
        "checks": {"compatibility": True, "c_monotonicity": False,
                   "box": [[0.0, 1.0]] * 3},
    }
    path = tmp_json("incompat.json", cfg)
    assert run_cli(["run", "--config", path, "--quiet"]) == 0
    assert run_cli(["run", "--config", path, "--quiet", "--assert"]) == 2


def test_cli_section_filtering(tmp_path, tmp_json):
    cpath = tmp_json("cfg.json", BASE_CONFIG)
    out = tmp_path / "analyze.json"
    assert run_cli(["analyze", "--config", cpath, "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["points"] and not rep["solves"] and not rep["checks"]
    out = tmp_path / "solve.json"
    assert run_cli(["solve", "--config", cpath, "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["solves"] and not rep["points"]
    out = tmp_path / "check.json"
    assert run_cli(["check", "--config", cpath, "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["checks"] and not rep["points"]


def test_cli_csv_format_writes_three_tables(tmp_path, tmp_json):
    cpath = tmp_json("cfg.json", BASE_CONFIG)
    out = tmp_path / "rep.csv"
    assert run_cli(["run", "--config", cpath, "--out", str(out),
                    "--format", "csv", "--quiet"]) == 0
    assert out.exists()
    assert (tmp_path / "rep_solves.csv").exists()
    assert (tmp_path / "rep_checks.csv").exists()
    assert (tmp_path / "rep_plan.csv").exists()
    assert (tmp_path / "rep_certificate.csv").exists()
    head = out.read_text().splitlines()[0]
    assert head.startswith("index,q_plus,q_minus,q_zero")


def test_cli_figures_rendered_and_referenced(tmp_path, tmp_json):
    cpath = tmp_json("cfg.json", BASE_CONFIG)
    out = tmp_path / "rep.json"
    figs = tmp_path / "figs"
    assert run_cli(["run", "--config", cpath, "--out", str(out),
                    "--figures", str(figs), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    fig_point = rep["points"][0]["figure"]
    fig_solve = rep["solves"][0]["figure"]
    for f in (fig_point, fig_solve):
        assert os.path.exists(f) and os.path.getsize(f) > 1000
        assert f.endswith(".png")


def test_plan_file_probe_round_trip(tmp_path, tmp_json):
    cpath = tmp_json("cfg.json", BASE_CONFIG)
    out = tmp_path / "rep.json"
    assert run_cli(["solve", "--config", cpath, "--out", str(out), "--quiet"]) == 0
    plan_path = json.loads(out.read_text())["solves"][0]["exports"]["plan"]
    cfg = copy.deepcopy(BASE_CONFIG)
    cfg["solve"]["plan_files"] = [plan_path]
    cpath2 = tmp_json("cfg2.json", cfg)
    out2 = tmp_path / "rep2.json"
    assert run_cli(["solve", "--config", cpath2, "--out", str(out2), "--quiet"]) == 0
    probe = json.loads(out2.read_text())["solves"][0]["nonuniqueness"]
    assert probe["feasible"] == [True, True]
    assert probe["objective_match"] and not probe["nonunique"]
    assert probe["tv_distance"] <= 1e-12


def test_presets_list_and_expectations():
    names = presets.names()
    assert len(names) == 11
    for name in names:
        p = presets.get(name)
        assert p.description and p.config
        parse_config(copy.deepcopy(p.config))
    with pytest.raises(KeyError):
        presets.get("nope")


def test_preset_cli_list_json_carries_usable_configs(capsys):
    assert run_cli(["presets", "list", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in payload] == presets.names()
    for e in payload:
        parse_config(copy.deepcopy(e["config"]))


@pytest.mark.parametrize("name", presets.names())
def test_preset_outcomes_match_expected(name):
    p = presets.get(name)
    cfg = parse_config(copy.deepcopy(p.config))
    rep, _ = report.run(cfg)
    exp = p.expected
    if "signature" in exp:
        s = rep["points"][0]["signature"]
        assert (s["q_plus"], s["q_minus"], s["q_zero"]) == exp["signature"]
    if "eigenvalues" in exp:
        got = sorted(rep["points"][0]["eigenvalues"])
        assert np.allclose(got, exp["eigenvalues"], atol=1e-10)
    if "dimension_bound" in exp:
        assert rep["points"][0]["dimension_bound"] == exp["dimension_bound"]
    if "objective" in exp:
        assert rep["solves"][0]["objective"] == pytest.approx(exp["objective"], abs=1e-9)
        assert rep["solves"][0]["optimality"]["passed"]
    if "support_keys" in exp:
        got = [tuple(e["key"]) for e in rep["solves"][0]["support"]]
        assert got == exp["support_keys"]
    if "necessary_condition" in exp:
        assert rep["points"][0]["necessary_condition"]["holds"] == exp["necessary_condition"]
    if "pair_signs" in exp:
        chk = next(c for c in rep["checks"] if c["name"] == "two_monotone")
        assert set(chk["signs"].values()) == exp["pair_signs"]
    if "compatible" in exp:
        chk = next(c for c in rep["checks"] if c["name"] == "compatibility")
        assert (chk["verdict"] == "compatible") == exp["compatible"]
    if "nonunique" in exp:
        non = rep["solves"][0]["nonuniqueness"]
        assert non["nonunique"] == exp["nonunique"]
        assert non["tv_distance"] == pytest.approx(exp["tv_distance"], abs=1e-12)
    if "cross_rank" in exp:
        assert rep["points"][0]["rank_bounds"]["max_rank"] == exp["cross_rank"]
    if "support_sum" in exp:
        for atom in rep["solves"][0]["support"]:
            total = sum(c[0] for c in atom["coordinates"])
            assert total == pytest.approx(exp["support_sum"], abs=1e-9)


def test_preset_cli_run_smoke(tmp_path):
    out = tmp_path / "preset.json"
    assert run_cli(["presets", "run", "comonotone-pair", "--out", str(out),
                    "--quiet", "--assert"]) == 0
    rep = json.loads(out.read_text())
    assert rep["solves"][0]["objective"] == pytest.approx(-5.0 / 12.0, abs=1e-12)


def test_zero_tol_and_seed_flags(tmp_path, tmp_json):
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "bilinear", "dims": [1, 1],
                 "pairs": [{"i": 1, "j": 2, "value": 1e-13}]},
        "points": [[[0.0], [0.0]]],
        "checks": {"c_monotonicity": False},
    }
    cpath = tmp_json("tiny.json", cfg)
    out = tmp_path / "rep.json"
    assert run_cli(["analyze", "--config", cpath, "--out", str(out), "--quiet",
                    "--zero-tol", "1.0"]) == 0
    rep = json.loads(out.read_text())
    sig = rep["points"][0]["signature"]
    assert (sig["q_plus"], sig["q_minus"], sig["q_zero"]) == (0, 0, 2)
    assert sig["zero_tol"] == 1.0
