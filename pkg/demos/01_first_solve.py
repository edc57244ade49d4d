"""
Recovering a sparse vector with support exploration
===================================================

Draw a noisy Gaussian problem, run SEA next to the greedy and thresholding
baselines, and compare what each of them recovers.
"""
import numpy as np

from seasparse.metrics import dist_supp, exact_support_match
from seasparse.model import GeneratorSpec, build_problem
from seasparse.solvers import SolverConfig, run_solver

# 60 unknowns, 30 measurements, 6 nonzeros, noise at 1% of ||A x*||
problem = build_problem(GeneratorSpec(n=60, m=30, k=6, noise_radius_fraction=0.01, seed=5))
print("true support:", [i + 1 for i in problem.true_support])

# every solver receives the same problem; 256 k iterations as in the sweeps
config = SolverConfig(max_iter=256 * problem.k)
for algo in ("sea", "omp", "els", "iht", "htp", "sea-els"):
    r = run_solver(algo, problem, config)
    print(f"{algo:8s} loss {r.loss_best:9.3e}  exact {exact_support_match(r.x_best, problem.true_support)!s:5s}"
          f"  dist_supp {dist_supp(r.x_best, problem.true_support, problem.k):.2f}"
          f"  supports explored {r.supports_explored}")

# HTP starts from X0 = 0, whose top-k tie block is the last k indices, and can
# stop there as soon as the support repeats

# SEA keeps its best iterate; t_best says when it was found
r = run_solver("sea", problem, config)
print("SEA best iterate at t =", r.t_best, "of", r.iterations_run)
err = np.linalg.norm(r.x_best.to_dense() - problem.x_star.to_dense())
print(f"||x_best - x*|| = {err:.3e}, ||e|| = {np.linalg.norm(problem.e):.3e}")
