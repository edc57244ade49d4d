"""
Warm starts and a logistic loss
===============================

SEA can post-process the output of another solver: its best iterate is never
worse than the starting point. The same exploration loop also runs on the
logistic loss for sparse classification.
"""
import numpy as np

from seasparse.losses import LossModel
from seasparse.metrics import dist_supp
from seasparse.model import GeneratorSpec, Problem, SparseVector, build_problem
from seasparse.solvers import SolverConfig, run_solver, sea, warm_start

problem = build_problem(GeneratorSpec(n=80, m=35, k=8, noise_radius_fraction=0.01, seed=2))
for inner in ("omp", "els"):
    r = warm_start(inner, "sea", problem, outer_config=SolverConfig(max_iter=500))
    print(f"{inner}: loss {r.info['inner_loss']:.3e} -> SEA_{inner.upper()} {r.loss_best:.3e},"
          f" {r.supports_after_init} new supports explored")

# sparse logistic regression on synthetic labels
rng = np.random.default_rng(0)
A = rng.standard_normal((300, 40))
w = np.zeros(40)
w[[3, 17, 29]] = [2.0, -1.5, 1.0]
y = (rng.random(300) < 1.0 / (1.0 + np.exp(-A @ w))).astype(float)
labels = Problem(A, y, 3, x_star=SparseVector.from_dense(w))
model = LossModel.logistic(A, y)
r = sea(labels, SolverConfig(eta=0.01, max_iter=200), loss=model)
print("logistic SEA support:", [i + 1 for i in r.x_best.support],
      "dist_supp", dist_supp(r.x_best, labels.true_support, 3))
print("compare OMP:", [i + 1 for i in run_solver("omp", labels, None, model).x_best.support])
