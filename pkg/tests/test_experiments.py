import numpy as np
import pytest

from seasparse.errors import ConfigError
from seasparse.experiments import (CSV_COLUMNS, ExperimentConfig, ResultGrid, emit_csv,
                                   emit_summary, preset, resolve_threads, run_deconvolution,
                                   run_phase_transition)
from seasparse.plotting import emit_svg


def tiny_pt(**kw):
    base = dict(kind="phase_transition", n=12, m_grid=[6, 12], k_grid=[1, 2],
                runs_per_cell=3, algorithms=["sea", "omp", "sea-els", "els"], max_iter=40)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def tiny_deconv(**kw):
    base = dict(kind="deconvolution", n=32, k_grid=[1, 3], runs_per_cell=3, noise_fraction=0.0,
                algorithms=["sea", "omp", "iht", "htp", "els", "sea-els"], max_iter=200)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "phase_transition", "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(runs_per_cell=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=["lasso"])
    with pytest.raises(ConfigError):
        ExperimentConfig(max_iter=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(m_grid=[])
    cfg = ExperimentConfig(kind="phase_transition", n=60, runs_per_cell=2000, scale="desk")
    with pytest.raises(ConfigError):
        run_phase_transition(cfg)


def test_grids_and_iterations():
    cfg = preset("phase_transition", "paper")
    assert len(cfg.resolved_m_grid()) == 18 and cfg.resolved_m_grid()[-1] == 500
    assert cfg.resolved_k_grid(40) == list(range(1, 21))
    assert preset("phase_transition").resolved_k_grid(40) == list(range(1, 21, 2))
    assert cfg.iterations(5) == 1280
    assert preset("deconvolution").iterations(5) == 1000


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("SEA_THREADS", "3")
    assert resolve_threads(ExperimentConfig()) == 3
    assert resolve_threads(ExperimentConfig(), 2) == 2
    monkeypatch.delenv("SEA_THREADS")
    assert resolve_threads(ExperimentConfig()) == 1
    with pytest.raises(ConfigError):
        resolve_threads(None, 0)


def test_phase_transition_paired_and_deterministic():
    cfg = tiny_pt()
    g1 = run_phase_transition(cfg, threads=1)
    g2 = run_phase_transition(cfg, threads=2)
    assert g1.rows == g2.rows
    assert all(c["runs"] == 3 for c in g1.cells.values())
    for (m, algo), k in g1.thresholds.items():
        assert k >= (1 if m == 12 else 0)
    seeds = {}
    for r in g1.rows:
        seeds.setdefault((r["m"], r["k"], r["run"]), set()).add(r["seed"])
    assert all(len(s) == 1 for s in seeds.values())


def test_deconvolution_k1_and_warm_start():
    g = run_deconvolution(tiny_deconv())
    for r in g.rows:
        # HTP starts on the tie-rule support of X0 = 0 and may halt there at once
        if r["k"] == 1 and r["algorithm"] != "htp":
            assert r["dist_supp"] == 0
    by = {(r["k"], r["run"], r["algorithm"]): r for r in g.rows}
    for (k, run, algo), r in by.items():
        if algo == "sea-els":
            assert r["loss_best"] <= by[(k, run, "els")]["loss_best"] + 1e-15


def test_deconvolution_variants():
    g = run_deconvolution(tiny_deconv(k_prime_ratio=1.5, algorithms=["sea", "omp"], k_grid=[2]))
    assert all(r["k_prime"] == 3 for r in g.rows)
    assert all("dist_supp_largest" in r for r in g.rows)
    assert "mean_dist_supp_largest" in next(iter(g.cells.values()))
    g = run_deconvolution(tiny_deconv(eta_multipliers=[0.5, 1, 2], algorithms=["iht", "sea"],
                                      k_grid=[2]))
    assert set(g.algorithms) == {"iht[eta*0.5]", "iht", "iht[eta*2]", "sea"}
    g = run_deconvolution(tiny_deconv(noise_mode="before_A", noise_fraction=0.2,
                                      amplitude_range=[1, 10], algorithms=["omp"], k_grid=[2]))
    assert all(r["noise_mode"] == "before_A" for r in g.rows)


def test_emit_csv_and_svg(tmp_path):
    empty = ResultGrid.from_rows("phase_transition", [])
    emit_csv(empty, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    g = run_phase_transition(tiny_pt(m_grid=[12], k_grid=[1], runs_per_cell=1,
                                     algorithms=["omp", "sea"]))
    emit_csv(g, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert len(lines) == 3 and all(len(l.split(",")) == len(CSV_COLUMNS) for l in lines)
    emit_csv(g, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    emit_svg(g, tmp_path / "a.svg", "threshold")
    emit_svg(g, tmp_path / "b.svg", "threshold")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert (tmp_path / "a.svg").read_text().startswith("<svg")
    emit_svg(g, tmp_path / "m.svg", "metric", "mean_rel_loss")
    emit_summary(g, tmp_path / "s.json")
    with pytest.raises(ValueError):
        emit_svg(g, tmp_path / "x.svg", "pie")
