"""Command line front end: ``seasparse <subcommand> ...``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
Every subcommand writes the effective configuration (with resolved seeds) to
``effective_config.json`` next to its outputs.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, io, theory
from .errors import ConfigError, NumericalError, SeaError
from .losses import LossModel
from .model import GeneratorSpec, build_problem
from .plotting import emit_svg
from .solvers import SOLVER_IDS, SolverConfig, Trace, default_step, run_solver

__all__ = ["main", "build_parser"]


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(io.to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    return d


def _merge(args, allowed, overrides):
    """Flag values overridden by JSON config keys; unknown keys are errors."""
    unknown = sorted(set(overrides) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    opts = {k: getattr(args, k) for k in allowed}
    opts.update(overrides)
    return opts


def _cmd_solve(args):
    allowed = ("algo", "problem", "k", "max_iter", "eta", "seed", "loss", "out", "record_trace")
    o = _merge(args, allowed, _load_config(args.config))
    if o["algo"] not in SOLVER_IDS:
        raise ConfigError(f"unknown solver {o['algo']!r}")
    if not o["problem"]:
        raise ConfigError("--problem is required")
    problem = io.load_problem(o["problem"], k=o["k"])
    loss = None
    if o["loss"] == "logistic":
        loss = LossModel.logistic(problem.A, problem.y)
    elif o["loss"] != "ls":
        raise ConfigError(f"unknown loss {o['loss']!r}")
    eta = o["eta"] if o["eta"] is not None else default_step(problem.A)
    cfg = SolverConfig(eta=eta, max_iter=o["max_iter"], seed=o["seed"],
                       record_trace=bool(o["record_trace"]))
    res = run_solver(o["algo"], problem, cfg, loss)
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    result = {
        "algorithm": o["algo"],
        "k": problem.k,
        "support": [i + 1 for i in res.x_best.support],
        "values": res.x_best.values,
        "t_best": res.t_best,
        "loss_best": res.loss_best,
        "iterations_run": res.iterations_run,
        "supports_explored": res.supports_explored,
        "supports_after_init": res.supports_after_init,
        "eta": eta,
    }
    if problem.has_truth:
        from .metrics import dist_supp, exact_support_match
        result["success"] = exact_support_match(res.x_best, problem.true_support)
        result["dist_supp"] = dist_supp(res.x_best, problem.true_support, problem.k)
    _write_json(out / "result.json", result)
    io.write_trace(out / "trace.csv", res.trace)
    io.write_sparse(out / "x_best.csv", res.x_best)
    _write_json(out / "effective_config.json", dict(o, eta=eta, k=problem.k, command="solve"))
    print(f"{o['algo']}: loss {res.loss_best:.6g} at t={res.t_best}, "
          f"{res.supports_explored} supports explored -> {out}")
    return 0


_SWEEP_FLAGS = {
    "n": "n", "runs": "runs_per_cell", "seed": "base_seed", "noise_fraction": "noise_fraction",
    "noise_mode": "noise_mode", "algorithms": "algorithms", "max_iter": "max_iter",
    "k_grid": "k_grid", "m_grid": "m_grid", "k_prime_ratio": "k_prime_ratio",
    "eta_multipliers": "eta_multipliers", "amplitude": "amplitude_range", "sigma": "sigma",
    "timing": "timing",
}


def _cmd_sweep(args, kind):
    overrides = {}
    for flag, key in _SWEEP_FLAGS.items():
        v = getattr(args, flag, None)
        if v not in (None, False):
            overrides[key] = v
    overrides.update(_load_config(args.config))
    overrides.pop("kind", None)
    scale = overrides.pop("scale", args.scale)
    cfg = experiments.preset(kind, scale, **overrides)
    threads = experiments.resolve_threads(cfg, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = experiments.run_experiment(cfg, threads)
    experiments.emit_csv(grid, out / "results.csv")
    experiments.emit_summary(grid, out / "summary.json")
    if kind == "phase_transition":
        emit_svg(grid, out / "threshold.svg", "threshold")
    else:
        emit_svg(grid, out / "dist_supp.svg", "metric", "mean_dist_supp")
        emit_svg(grid, out / "rel_loss.svg", "metric", "mean_rel_loss")
    eff = cfg.to_dict()
    eff["kind"] = kind
    eff["threads"] = threads
    eff["resolved_m_grid"] = cfg.resolved_m_grid() if kind == "phase_transition" else [cfg.n]
    _write_json(out / "effective_config.json", eff)
    print(f"{kind}: {len(grid.rows)} runs -> {out}")
    return 0


def _cmd_verify(args):
    o = _merge(args, ("problem", "trace", "eta", "x0", "cap", "out"), _load_config(args.config))
    if not o["problem"] or not o["trace"]:
        raise ConfigError("--problem and --trace are required")
    problem = io.load_problem(o["problem"])
    supports = io.read_trace_supports(o["trace"])
    if any(len(S) != problem.k for S in supports):
        raise ConfigError("trace supports do not match the problem's k")
    trace = Trace(support_sequence=supports)
    eta = o["eta"] if o["eta"] is not None else default_step(problem.A)
    X0 = io.read_vector(o["x0"]) if o["x0"] else None
    report = theory.theory_report(problem, trace, eta, X0, cap=o["cap"])
    text = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if o["out"]:
        out = Path(o["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        _write_json(out.parent / "effective_config.json", dict(o, eta=eta, command="verify-theory"))
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gen(args):
    allowed = ("n", "m", "k", "noise_fraction", "noise_mode", "amplitude", "matrix", "sigma",
               "seed", "out")
    o = _merge(args, allowed, _load_config(args.config))
    m = o["m"] if o["m"] is not None else o["n"]
    try:
        spec = GeneratorSpec(n=o["n"], m=m, k=o["k"], noise_radius_fraction=o["noise_fraction"],
                             amplitude_range=tuple(o["amplitude"]), noise_mode=o["noise_mode"],
                             matrix_kind=o["matrix"], sigma=o["sigma"], seed=o["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    problem = build_problem(spec)
    io.save_problem(o["out"], problem)
    _write_json(Path(o["out"]) / "effective_config.json", dict(o, m=m, command="gen-problem"))
    print(f"wrote {o['matrix']} problem m={m} n={o['n']} k={o['k']} -> {o['out']}")
    return 0


def _floats(s):
    return [float(v) for v in s.split(",") if v]


def _ints(s):
    return [int(v) for v in s.split(",") if v]


def _names(s):
    return [v for v in s.split(",") if v]


def build_parser():
    p = argparse.ArgumentParser(prog="seasparse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one solver on a problem bundle")
    s.add_argument("--algo", default="sea", help=f"one of: {', '.join(SOLVER_IDS)}")
    s.add_argument("--problem", help="problem bundle directory")
    s.add_argument("--k", type=int, help="sparsity budget (default: from meta.json)")
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--eta", type=float, help="step size (default 1.8 / sigma_max(A)^2)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--loss", choices=("ls", "logistic"), default="ls")
    s.add_argument("--record-trace", action="store_true")
    s.add_argument("--out", default=".")
    s.add_argument("--config")

    for name, kind in (("phase-diagram", "phase_transition"), ("deconv", "deconvolution")):
        s = sub.add_parser(name, help=f"{kind.replace('_', ' ')} sweep")
        s.set_defaults(kind=kind)
        s.add_argument("--scale", choices=("desk", "paper"), default="desk")
        s.add_argument("--seed", type=int)
        s.add_argument("--runs", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--noise-fraction", type=float)
        s.add_argument("--noise-mode", choices=("after_A", "before_A"))
        s.add_argument("--algorithms", type=_names, help="comma-separated solver ids")
        s.add_argument("--max-iter", type=int)
        s.add_argument("--k-grid", type=_ints)
        s.add_argument("--m-grid", type=_ints)
        s.add_argument("--k-prime-ratio", type=float)
        s.add_argument("--eta-multipliers", type=_floats)
        s.add_argument("--amplitude", type=float, nargs=2, metavar=("LO", "HI"))
        s.add_argument("--sigma", type=float)
        s.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
        s.add_argument("--threads", type=int)
        s.add_argument("--out", default=name)
        s.add_argument("--config")

    s = sub.add_parser("verify-theory", help="theory report for a problem and a solver trace")
    s.add_argument("--problem")
    s.add_argument("--trace")
    s.add_argument("--eta", type=float)
    s.add_argument("--x0", help="initial X0 as a vector file (default 0)")
    s.add_argument("--cap", type=int, default=theory.ENUMERATION_CAP)
    s.add_argument("--out", help="output JSON (default: standard output)")
    s.add_argument("--config")

    s = sub.add_parser("gen-problem", help="draw a problem bundle")
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--m", type=int)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--noise-fraction", type=float, default=0.0)
    s.add_argument("--noise-mode", choices=("after_A", "before_A"), default="after_A")
    s.add_argument("--amplitude", type=float, nargs=2, default=(1.0, 2.0), metavar=("LO", "HI"))
    s.add_argument("--matrix", choices=("gaussian", "convolution", "orthonormal"), default="gaussian")
    s.add_argument("--sigma", type=float, default=3.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="problem")
    s.add_argument("--config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command in ("phase-diagram", "deconv"):
            return _cmd_sweep(args, args.kind)
        if args.command == "verify-theory":
            return _cmd_verify(args)
        return _cmd_gen(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, SeaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
