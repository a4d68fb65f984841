import csv
import json

import numpy as np
import pytest

from skgsim.experiments import (ALL_COLUMNS, DistFigureParams, SweepConfig, emit_dist_figures,
                                emit_trend_figures, point_hash, point_seed, read_table, run_sweep,
                                write_table)
from skgsim.sigproc import SweepPoint


def small_cfg(tmp_path, **kw):
    base = dict(bw_list=[100e6], ds_list=[50e-9], k_db_list=[30.0], snr_db_list=[20.0],
                n_frames=400, n_seeds=1, output_dir=str(tmp_path / "out"))
    base.update(kw)
    return SweepConfig(**base)


def test_smallest_sweep(tmp_path):
    rows = run_sweep(small_cfg(tmp_path))
    assert [r["kind"] for r in rows] == ["seed", "aggregate"]
    table = read_table(tmp_path / "out" / "sweep.csv")
    assert len(table) == 2
    conf = json.loads((tmp_path / "out" / "config.json").read_text())
    assert conf["n_frames"] == 400 and conf["sim"]["sample_rate"] == 1e9


def test_rows_carry_provenance(tmp_path):
    run_sweep(small_cfg(tmp_path, n_seeds=2))
    with open(tmp_path / "out" / "sweep.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == ALL_COLUMNS
        rows = list(reader)
    for r in rows:
        for col in ("bw_hz", "ds_s", "k_db", "snr_db", "rho_e", "n_frames", "master_seed",
                    "k", "alpha", "version", "i_ab", "i_ae", "skg_lower", "skg_upper"):
            assert r[col] != ""
    assert {r["seed_index"] for r in rows if r["kind"] == "seed"} == {"0", "1"}
    agg = [r for r in rows if r["kind"] == "aggregate"][0]
    assert float(agg["i_ab_std"]) >= 0


def test_bounds_consistent(tmp_path):
    for r in run_sweep(small_cfg(tmp_path, n_seeds=2), write=False):
        assert 0 <= r["skg_lower"] <= r["skg_upper"] == pytest.approx(r["i_ab"])


def test_parallel_matches_serial(tmp_path):
    a = run_sweep(small_cfg(tmp_path / "a", snr_db_list=[5.0, 30.0], n_seeds=2))
    b = run_sweep(small_cfg(tmp_path / "b", snr_db_list=[5.0, 30.0], n_seeds=2, jobs=2))
    assert (tmp_path / "a/out/sweep.csv").read_bytes() == (tmp_path / "b/out/sweep.csv").read_bytes()
    assert a == b


def test_adding_points_keeps_existing_results(tmp_path):
    one = run_sweep(small_cfg(tmp_path, snr_db_list=[20.0]), write=False)
    two = run_sweep(small_cfg(tmp_path, snr_db_list=[10.0, 20.0]), write=False)
    pick = [r for r in two if r["snr_db"] == 20.0 and r["kind"] == "seed"]
    assert pick[0]["i_ab"] == one[0]["i_ab"]


def test_seeds_are_point_specific():
    p, q = SweepPoint(1e8, 5e-8, 30.0, 20.0), SweepPoint(1e8, 5e-8, 30.0, 21.0)
    assert point_hash(p) != point_hash(q)
    assert point_hash(p) == point_hash(SweepPoint(1e8, 5e-8, 30, 20))
    s1, s2 = point_seed(0, p, 0), point_seed(0, p, 1)
    assert s1.generate_state(2).tolist() != s2.generate_state(2).tolist()


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        small_cfg(tmp_path, bw_list=[])
    with pytest.raises(ValueError):
        small_cfg(tmp_path, n_seeds=0)
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"bw_list": [1e8], "bogus": 1}))
    with pytest.raises(ValueError, match="bogus"):
        SweepConfig.from_json(path)


def test_config_from_json_with_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"bw_list": [1e8], "snr_db_list": [3], "n_frames": 100,
                                "sim": {"num_taps": 129}}))
    cfg = SweepConfig.from_json(path, n_frames=300, k=None)
    assert cfg.n_frames == 300 and cfg.k == 5 and cfg.sim.num_taps == 129


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_sweep(small_cfg(tmp_path, output_dir=str(blocker / "sub")))


def test_invalid_point_identified(tmp_path):
    with pytest.raises(ValueError, match="grid point"):
        run_sweep(small_cfg(tmp_path, ds_list=[5e-6]), write=False)


def test_trend_figures(tmp_path):
    cfg = small_cfg(tmp_path, bw_list=[100e6, 200e6], snr_db_list=[5.0, 30.0],
                    k_db_list=[10.0, 30.0], n_seeds=2, n_frames=300)
    run_sweep(cfg)
    csv_path = tmp_path / "out" / "sweep.csv"
    paths = emit_trend_figures(csv_path)
    assert [p.name for p in paths] == ["trend_snr_bw.svg", "trend_snr_ds.svg", "trend_k.svg"]
    first = {p.name: p.read_bytes() for p in paths}
    svg = first["trend_snr_bw.svg"].decode()
    assert svg.count("BW=100 MHz") == 1 and svg.count("BW=200 MHz") == 1
    again = {p.name: p.read_bytes() for p in emit_trend_figures(csv_path)}
    assert first == again


def test_trend_figures_need_aggregates(tmp_path):
    path = tmp_path / "empty.csv"
    write_table([], path)
    with pytest.raises(ValueError, match="aggregate"):
        emit_trend_figures(path)
    assert not list(tmp_path.glob("*.svg"))


def test_malformed_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="malformed"):
        read_table(path)


def test_dist_figures(tmp_path):
    params = DistFigureParams(n_mc=20_000, frame_samples=1000, seed=3)
    ks = emit_dist_figures(tmp_path, params)
    assert set(ks) == {(c, s) for c in ("unresolved", "resolved", "hybrid") for s in (5.0, 10.0)}
    assert max(ks.values()) < 0.02
    for n in (1, 2, 3):
        svg = (tmp_path / f"fig_case{n}.svg").read_text()
        assert "KS=" in svg
        for s in ("5", "10"):
            lines = (tmp_path / f"dist_case{n}_sigma{s}.csv").read_text().splitlines()
            assert lines[0] == "x,density"
    hybrid = (tmp_path / "fig_case3.svg").read_text()
    assert "3/5/4/2" in hybrid
