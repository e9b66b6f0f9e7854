import json

import numpy as np
import pytest

from commitbench import harness
from commitbench.battery import read_env
from commitbench.cli import main
from commitbench.config import build_env, load_config, noise_model, policy_config
from commitbench.errors import ConfigError, FormatError
from commitbench.forecast import write_archive
from commitbench.metrics import archive_metric
from commitbench.policies import building_truths, make_archives

SMALL = {"env": {"synthetic": {"n_days": 30}},
         "policy": {"horizon": 6, "v_max": 3}}


def small_cfg(tmp_path, **extra):
    over = json.loads(json.dumps(SMALL))
    over["output"] = str(tmp_path)
    for k, v in extra.items():
        over.setdefault(k, {}).update(v) if isinstance(v, dict) else over.__setitem__(k, v)
    return load_config(overrides=over)


def test_defaults_and_overrides(tmp_path):
    cfg = load_config()
    assert cfg["policy"]["horizon"] == 24 and cfg["forecast"]["a"] == 0.8
    path = tmp_path / "c.yaml"
    path.write_text("seed: 7\npolicy:\n  v_max: 5\n")
    cfg = load_config(path, {"policy": {"beta": 0.5}})
    assert (cfg["seed"], cfg["policy"]["v_max"], cfg["policy"]["beta"]) == (7, 5, 0.5)
    assert cfg["policy"]["horizon"] == 24


@pytest.mark.parametrize("doc", [
    "nope: 1\n",
    "policy:\n  v_maxx: 3\n",
    "policy:\n  v_max: 30\n",
    "policy: 3\n",
    "env:\n  synthetic:\n    n_dayz: 3\n",
    "[1, 2]\n",
    "policy: {v_min: 4, v_max: 2}\n",
])
def test_bad_config_rejected(tmp_path, doc):
    path = tmp_path / "c.yaml"
    path.write_text(doc)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_json_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"forecast": {"kind": "iid"}}))
    assert load_config(path)["forecast"]["kind"] == "iid"


def test_sigma_hits_target_mae(tmp_path):
    cfg = small_cfg(tmp_path)
    env = build_env(cfg)
    noise = noise_model(cfg, env)
    arch = make_archives(env, 6, 1, noise)
    err = archive_metric(arch[0], building_truths(env)[0], "mae")
    mean_load = env.buildings[0].load.values[:env.scored_hours].mean()
    assert err == pytest.approx(0.1 * mean_load, rel=0.1)


def test_gen_data_round_trip(tmp_path):
    cfg = small_cfg(tmp_path, env={"synthetic": {"n_days": 30, "n_buildings": 2}})
    harness.cmd_gen_data(cfg)
    env = build_env(cfg)
    back = read_env(tmp_path)
    assert back.n_buildings == 2 and back.scored_hours == env.scored_hours
    for a, b in zip(env.buildings, back.buildings):
        np.testing.assert_array_equal(a.load.values, b.load.values)
        np.testing.assert_array_equal(a.pv.values, b.pv.values)
    np.testing.assert_array_equal(env.price.values, back.price.values)


@pytest.fixture(scope="module")
def swept(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = load_config(overrides={**SMALL, "output": str(out)})
    return cfg, harness.cmd_sweep(cfg), out


def test_sweep_outputs(swept):
    cfg, res, out = swept
    cells = res["grids"]["deterministic"]
    assert [(c["v_F"], c["v_O"]) for c in cells] == [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)]
    for v_F in (1, 2, 3):
        row = [c for c in cells if c["v_F"] == v_F]
        assert sum(c["row_best_avg_score"] for c in row) == 1
        best = min(c["avg_score"] for c in row)
        assert [c for c in row if c["row_best_avg_score"]][0]["avg_score"] == best
    assert all(c["clips"] == 0 for c in cells)
    on_disk = json.loads((out / "results.json").read_text())
    assert on_disk["grids"] == res["grids"]
    table = harness.read_grid_csv(out / "grid.csv")
    assert table[("deterministic", "avg_score")][3][2] == cells[4]["avg_score"]
    assert set(table[("deterministic", "avg_score")][1]) == {1}


def test_sweep_is_byte_identical(swept, tmp_path):
    cfg, _, out = swept
    harness.cmd_sweep({**cfg, "output": str(tmp_path)})
    assert (tmp_path / "results.json").read_bytes().replace(str(tmp_path).encode(), b"") == \
        (out / "results.json").read_bytes().replace(str(out).encode(), b"")
    assert (tmp_path / "grid.csv").read_bytes() == (out / "grid.csv").read_bytes()


def test_parallel_sweep_matches_serial(swept, tmp_path):
    cfg, res, _ = swept
    par = harness.sweep({**cfg, "workers": 2})
    assert par["grids"] == res["grids"]


def test_curves_and_correlate(swept, tmp_path):
    cfg, res, _ = swept
    rows = harness.curves({**cfg, "output": str(tmp_path)})
    assert [r["v"] for r in rows] == [1, 2, 3]
    diag = [c for c in res["grids"]["deterministic"] if c["v_F"] == c["v_O"]]
    assert [r["score"] for r in rows] == [c["avg_score"] for c in diag]
    path = harness.write_curves_csv(rows, tmp_path / "curves.csv")
    back = harness.read_curves_csv(path)
    assert back == rows
    corr = harness.cmd_correlate(path, tmp_path / "corr.json")
    assert set(corr) == {"score", "score_with_grid"}
    assert set(corr["score"]) == {"mae", "mac_v", "mac_h"}
    doc = json.loads((tmp_path / "corr.json").read_text())
    assert doc["correlations"] == corr


def test_correlate_zero_variance_is_null():
    rows = [{"v": v, "mae": 1.0, "mac_v": float(v), "mac_h": 0.1 * v,
             "score": 0.9 - 0.01 * v, "score_with_grid": 0.8} for v in (1, 2, 3)]
    corr = harness.correlate(rows)
    assert corr["score"]["mae"] is None
    assert corr["score"]["mac_v"] == pytest.approx(-1.0)
    assert all(v is None for v in corr["score_with_grid"].values())
    with pytest.raises(ConfigError):
        harness.correlate(rows[:2])


def test_bad_curves_file(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("v,mae,score\n1,abc,0.9\n")
    with pytest.raises(FormatError):
        harness.read_curves_csv(p)
    p.write_text("mae,score\n")
    with pytest.raises(FormatError):
        harness.read_curves_csv(p)


def test_bounds_file(tmp_path):
    cfg = load_config(overrides={"output": str(tmp_path), "bounds": {"a": 0.99}})
    curve = harness.cmd_bounds(cfg)
    rows = harness.read_tradeoff_csv(tmp_path / "tradeoff.csv")
    assert len(rows) == 24
    assert rows[0]["argmin_expdecay"] == curve.argmin_expdecay
    assert [r["bound_iid"] for r in rows] == [r[1] for r in curve.rows]
    meta = json.loads((tmp_path / "tradeoff.json").read_text())
    assert meta["argmin_iid"] == curve.argmin_iid and "note" in meta


def test_bounds_file_without_lipschitz(tmp_path):
    cfg = load_config(overrides={"output": str(tmp_path), "bounds": {"alpha": 0.5, "v_max": 4}})
    harness.cmd_bounds(cfg)
    rows = harness.read_tradeoff_csv(tmp_path / "tradeoff.csv")
    assert all(r["bound_expdecay"] is None and r["argmin_expdecay"] is None for r in rows)


def test_simulate_trace_replays_without_clips(tmp_path):
    cfg = small_cfg(tmp_path, policy={"v_F": 3, "v_O": 2, "beta": 0.2})
    kpi = harness.cmd_simulate(cfg)
    env = build_env(cfg)
    again = harness.replay(env, tmp_path / "trace.csv")
    assert again.n_clips == 0
    sim = json.loads((tmp_path / "simulation.json").read_text())
    assert sim["kpi"]["avg_score"] == kpi.avg_score
    assert harness.score(again, env).avg_score == pytest.approx(kpi.avg_score, rel=1e-12)


def test_simulate_afhc(tmp_path):
    cfg = small_cfg(tmp_path, policy={"algorithm": "afhc", "v_F": 2, "v_O": 2})
    harness.cmd_simulate(cfg)
    sim = json.loads((tmp_path / "simulation.json").read_text())
    assert len(sim["constituent_costs"]) == 2


def test_simulate_from_imported_archive(tmp_path):
    cfg = small_cfg(tmp_path, policy={"v_F": 2, "v_O": 1})
    env = build_env(cfg)
    pcfg = policy_config(cfg)
    arch = make_archives(env, pcfg.horizon, 2, noise_model(cfg, env))[0]
    path = write_archive(arch, tmp_path / "archive.csv")
    generated = harness.simulate(cfg)[2]
    imported = harness.simulate({**cfg, "forecast": {**cfg["forecast"], "archive": str(path)}})[2]
    assert imported.avg_score == pytest.approx(generated.avg_score, rel=1e-12)


def test_cli_verbs(tmp_path, capsys):
    common = ["--n-days", "30", "--horizon", "4", "--v-max", "3", "--out", str(tmp_path)]
    assert main(["gen-data"] + common) == 0
    assert main(["bounds"] + common) == 0
    assert main(["curves"] + common) == 0
    assert main(["correlate", "--curves", str(tmp_path / "curves.csv")] + common) == 0
    assert main(["simulate", "--v-F", "2", "--v-O", "2"] + common) == 0
    for name in ("buildings.csv", "district.csv", "tradeoff.csv", "curves.csv", "corr.json",
                 "trace.csv", "simulation.json"):
        assert (tmp_path / name).exists()
    assert "avg_score=" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--v-max", "40", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "curves.csv"
    bad.write_text("garbage\n")
    assert main(["correlate", "--curves", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["correlate", "--curves", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 3
    broken = tmp_path / "env"
    broken.mkdir()
    assert main(["simulate", "--env-dir", str(broken), "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "config error" in err and "data error" in err
