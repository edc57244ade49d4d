import numpy as np
import pytest

from oracles import best_support, htp_reference, iht_reference
from seasparse.errors import MissingGroundTruth
from seasparse.losses import LossModel
from seasparse.model import GeneratorSpec, Problem, SparseVector, build_problem
from seasparse.solvers import (SOLVER_IDS, SolverConfig, els, htp, iht, niht, omp, ompr,
                               oracle_sea, random_search, run_solver, sea, sea_efficient,
                               warm_start)


def small(seed, n=12, m=10, k=2, noise=0.0):
    return build_problem(GeneratorSpec(n=n, m=m, k=k, noise_radius_fraction=noise, seed=seed))


def ortho(seed, n=16, k=4):
    return build_problem(GeneratorSpec(n=n, m=n, k=k, matrix_kind="orthonormal", seed=seed))


def test_sea_identity_hand_trace():
    p = Problem(np.eye(3), np.array([0.0, 5.0, 0.0]), 1)
    r = sea(p, SolverConfig(eta=1.0, max_iter=5, record_trace=True))
    assert r.trace.support_sequence[:2] == [(2,), (1,)]
    assert np.allclose(r.trace.explore_sequence[1], [0, 5, 0])
    assert r.t_best == 1 and np.allclose(r.x_best.to_dense(), [0, 5, 0])


def test_sea_orthonormal_recovers():
    for seed in range(5):
        p = ortho(seed)
        r = sea(p, SolverConfig(max_iter=50))
        assert np.allclose(r.x_best.to_dense(), p.x_star.to_dense(), atol=1e-10)
        first = next(t for t, S in enumerate(r.trace.support_sequence)
                     if set(p.true_support) <= set(S))
        assert first <= 5


def test_sea_never_beats_exhaustive():
    for seed in range(10):
        p = small(seed, noise=0.05)
        opt, S_opt = best_support(p.A, p.y, 2)
        r = sea(p, SolverConfig(max_iter=200))
        assert r.loss_best >= opt - 1e-12
        if r.x_best.support == S_opt:
            assert r.loss_best == pytest.approx(opt, rel=1e-8, abs=1e-14)


def test_sea_efficient_equivalent():
    for seed in range(10):
        p = small(seed, noise=0.02)
        cfg = SolverConfig(max_iter=150)
        a, b = sea(p, cfg), sea_efficient(p, cfg)
        assert a.trace.support_sequence == b.trace.support_sequence
        assert a.t_best == b.t_best and a.x_best == b.x_best
        assert b.ls_solves == len(set(b.trace.support_sequence)) == b.supports_explored


def test_sea_efficient_single_solve_for_repeated_support():
    p = Problem(np.eye(3), np.array([0.0, 5.0, 0.0]), 1)
    r = sea_efficient(p, SolverConfig(eta=1.0, max_iter=100))
    assert r.trace.support_sequence[1:] == [(1,)] * 99
    assert r.ls_solves == 2


def test_sea_deconvolution_explores_fewer_supports_than_iterations():
    p = build_problem(GeneratorSpec(n=128, m=128, k=8, matrix_kind="convolution", seed=1))
    r = sea_efficient(p, SolverConfig(max_iter=1000))
    assert r.supports_explored < r.iterations_run


def test_loss_best_consistent_and_minimal():
    p = small(3, noise=0.05)
    for algo in SOLVER_IDS:
        r = run_solver(algo, p, SolverConfig(max_iter=60))
        dense = r.x_best.to_dense()
        assert r.loss_best == pytest.approx(0.5 * np.sum((p.A @ dense - p.y) ** 2), abs=1e-10)
        assert r.t_best <= r.iterations_run
        if r.trace.per_iteration_loss:
            assert r.loss_best <= min(r.trace.per_iteration_loss) + 1e-15
        new = [S for _, S, _ in r.trace.per_new_support]
        assert len(new) == len(set(new))


def test_monotone_best_in_max_iter():
    p = small(4, noise=0.05)
    for algo in ("sea", "iht", "niht", "htp", "random", "ompr", "els"):
        losses = [run_solver(algo, p, SolverConfig(max_iter=t)).loss_best for t in (5, 20, 80)]
        assert losses[0] >= losses[1] >= losses[2]


def test_eta_invariance():
    for seed in range(5):
        p = small(seed, n=20, m=12, k=3, noise=0.05)
        seqs = [sea(p, SolverConfig(eta=eta, max_iter=200)).trace.support_sequence
                for eta in (0.1, 1.0, 10.0)]
        assert seqs[0] == seqs[1] == seqs[2]


def test_generalized_sea_with_ls_model_is_identical():
    p = small(5, noise=0.05)
    cfg = SolverConfig(max_iter=80)
    a = sea(p, cfg)
    b = sea(p, cfg, loss=LossModel.least_squares(p.A, p.y))
    assert a.trace.support_sequence == b.trace.support_sequence and a.x_best == b.x_best


def test_sea_logistic_runs():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((60, 10))
    w = np.zeros(10)
    w[[2, 7]] = [2.0, -2.0]
    y = (rng.random(60) < 1 / (1 + np.exp(-A @ w))).astype(float)
    p = Problem(A, y, 2)
    r = sea(p, SolverConfig(eta=0.05, max_iter=100), loss=LossModel.logistic(A, y))
    assert np.isfinite(r.loss_best) and len(r.x_best.support) == 2


def test_oracle_sea_from_zero():
    for seed in range(5):
        p = small(seed, n=20, m=15, k=4)
        r = oracle_sea(p, SolverConfig(max_iter=100))
        assert r.info["halted"] and r.iterations_run - 1 <= p.k
        assert set(p.true_support) <= set(r.x_best.support)


def test_oracle_sea_orthonormal_exact():
    p = ortho(2)
    r = oracle_sea(p)
    assert np.allclose(r.x_best.to_dense(), p.x_star.to_dense(), atol=1e-10)


def test_oracle_needs_truth():
    with pytest.raises(MissingGroundTruth):
        oracle_sea(Problem(np.eye(3), np.ones(3), 1))


def test_iht_identity_and_zero_step():
    p = Problem(np.eye(3), np.array([3.0, 0.0, -1.0]), 1)
    r = iht(p, SolverConfig(eta=1.0, max_iter=10))
    assert np.allclose(r.x_final.to_dense(), [3, 0, 0])
    r = iht(p, SolverConfig(eta=1e-300, max_iter=10))
    assert np.max(np.abs(r.x_final.to_dense())) <= 1e-290


def test_iht_matches_reference():
    p = small(6, noise=0.05)
    eta = 0.5
    r = iht(p, SolverConfig(eta=eta, max_iter=50, record_trace=True))
    ref = iht_reference(p.A, p.y, p.k, eta, 50)
    for t, x in enumerate(ref):
        S = r.trace.support_sequence[t]
        mine = np.zeros(p.n)
        mine[list(S)] = r.trace.explore_sequence[t][list(S)]
        assert np.max(np.abs(mine - x)) <= 1e-12


def test_htp_matches_reference_and_halts():
    p = small(7, noise=0.05)
    eta = 0.5
    r = htp(p, SolverConfig(eta=eta, max_iter=100))
    ref = htp_reference(p.A, p.y, p.k, eta, 100)
    assert r.iterations_run == len(ref) < 100
    assert np.allclose(r.x_final.to_dense(), ref[-1], atol=1e-10)


def test_htp_orthonormal():
    p = ortho(1)
    r = htp(p, SolverConfig(max_iter=50))
    assert np.allclose(r.x_best.to_dense(), p.x_star.to_dense(), atol=1e-10)
    assert r.iterations_run <= 2


def test_niht_orthonormal_unit_step():
    p = ortho(3)
    r = niht(p, SolverConfig(max_iter=10))
    assert np.allclose(r.info["initial_steps"][1:], 1.0)
    assert np.allclose(r.x_best.to_dense(), p.x_star.to_dense(), atol=1e-10)


def test_niht_step_contract():
    p = small(8, n=30, m=20, k=3, noise=0.05)
    r = niht(p, SolverConfig(max_iter=40, record_trace=True))
    seq = r.trace.support_sequence
    for t, step in enumerate(r.info["steps"][:-1]):
        assert 0 < step <= r.info["initial_steps"][t]


def test_niht_loss_settles_on_deconvolution():
    p = build_problem(GeneratorSpec(n=128, m=128, k=4, matrix_kind="convolution", seed=2))
    r = niht(p, SolverConfig(max_iter=300))
    seq, losses = r.trace.support_sequence, r.trace.per_iteration_loss
    last_change = max(t for t in range(1, len(seq)) if seq[t] != seq[t - 1]) if any(
        seq[t] != seq[t - 1] for t in range(1, len(seq))) else 0
    tail = losses[last_change:]
    assert all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(tail, tail[1:]))


def test_omp_examples():
    y = np.array([0.5, -3.0, 2.0, 0.1])
    r = omp(Problem(np.eye(4), y, 2))
    assert r.x_best.support == (1, 2) and np.allclose(r.x_best.values, [-3.0, 2.0])
    A = build_problem(GeneratorSpec(n=10, m=8, k=1, seed=0)).A
    r = omp(Problem(A, A[:, 6].copy(), 1))
    assert r.x_best.support == (6,) and r.loss_best <= 1e-20


def test_omp_ompr_els_against_exhaustive():
    for seed in range(10):
        p = small(seed, noise=0.02)
        opt, _ = best_support(p.A, p.y, 2)
        o, r2, e = omp(p), ompr(p), els(p)
        assert o.loss_best >= opt - 1e-12
        assert r2.loss_best <= o.loss_best + 1e-15
        assert opt - 1e-12 <= e.loss_best <= o.loss_best + 1e-15


def test_ompr_els_halt_on_optimal_support():
    p = ortho(4)
    init = p.x_star.to_dense()
    for fn in (ompr, els):
        r = fn(p, SolverConfig(init=init))
        assert r.info["accepted"] == 0 and r.x_best.support == p.true_support
    r = els(p, SolverConfig(init=init))
    assert r.supports_explored == 1 + p.n - p.k


def test_ompr_accepted_losses_decrease():
    p = small(11, n=20, m=10, k=3, noise=0.1)
    losses = ompr(p).trace.per_iteration_loss
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_random_search():
    p = small(2, n=8, m=8, k=2, noise=0.05)
    opt, S = best_support(p.A, p.y, 2)
    r = random_search(p, SolverConfig(max_iter=40, seed=3))
    drawn = set(r.trace.support_sequence)
    assert r.loss_best >= opt - 1e-12
    assert (S in drawn) == (abs(r.loss_best - opt) <= 1e-10)
    r2 = random_search(p, SolverConfig(max_iter=40, seed=3))
    assert r2.trace.support_sequence == r.trace.support_sequence


def test_random_search_hit_probability():
    from math import comb
    p_hit = 1 - (1 - 1 / comb(500, 20)) ** 100_000
    assert p_hit == pytest.approx(3.75e-31, rel=0.01)


def test_warm_start_dominance_and_counters():
    for seed in range(5):
        p = small(seed, n=20, m=12, k=3, noise=0.05)
        for inner, fn in (("els", els), ("omp", omp)):
            base = fn(p)
            w = warm_start(inner, "sea", p, outer_config=SolverConfig(max_iter=100))
            assert w.loss_best <= base.loss_best + 1e-15
            assert w.supports_explored == base.supports_explored + w.supports_after_init


def test_warm_start_orthonormal_matches_cold():
    p = ortho(5)
    a = run_solver("sea", p, SolverConfig(max_iter=30))
    b = run_solver("sea-omp", p, SolverConfig(max_iter=30))
    assert np.allclose(a.x_best.to_dense(), b.x_best.to_dense(), atol=1e-10)


def test_config_validation_and_dispatch():
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(eta=-1.0)
    with pytest.raises(ValueError):
        run_solver("lasso", small(0))
    with pytest.raises(ValueError):
        sea(small(0), SolverConfig(init=np.zeros(3)))
