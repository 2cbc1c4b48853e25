"""Command-line entry point: ``smclab {run,compare,tune,selftest}``.

Exit codes: 0 success, 2 configuration error, 3 simulation abort,
4 a requested ordering or self-check failed.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .sim import (BACKEND, compare, comparison_csv, compute_metrics, metrics_csv, simulate,
                  write_trajectory_csv)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_ASSERT = 0, 2, 3, 4


def _err(msg: str) -> None:
    print(f"smclab: {msg}", file=sys.stderr)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    doc = cfgmod.load(args.config)
    if "case" in doc:
        raise cfgmod.ConfigError("this config defines [[case]] entries; use 'compare'")
    sc = cfgmod.build_scenario(doc, dt=args.dt)
    band = cfgmod.settle_band(doc)
    traj = simulate(sc)
    out = _outdir(args.out)
    write_trajectory_csv(traj, out / f"{sc.name}_trajectory.csv")
    if traj.aborted:
        _err(f"{sc.name}: {traj.message}; partial trajectory of {len(traj)} rows kept")
        (out / f"{sc.name}_metrics.txt").write_text(
            f"status={traj.status}\nreason={traj.message}\n")
        return EXIT_ABORT
    m = compute_metrics(traj, sc.reference, band)
    (out / f"{sc.name}_metrics.txt").write_text("status=ok\n" + m.as_text())
    (out / f"{sc.name}_metrics.csv").write_text(metrics_csv(m))
    print(m.as_text(), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    doc = cfgmod.load(args.config)
    scenarios, orderings = cfgmod.build_compare(doc, dt=args.dt)
    rows, checks = compare(scenarios, orderings, cfgmod.settle_band(doc))
    table = comparison_csv(rows)
    print(table, end="")
    if args.out is not None:
        (_outdir(args.out) / f"{doc['name']}_comparison.csv").write_text(table)
    for r in rows:
        if r.status != "ok":
            _err(f"case {r.name}: {r.message}")
    failed = False
    for desc, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {desc}")
        failed |= not ok
    return EXIT_ASSERT if failed else EXIT_OK


def cmd_tune(args) -> int:
    from .mpso import tune, write_convergence_csv

    doc = cfgmod.load(args.config)
    swarm, fitness, names = cfgmod.build_tuning(doc, seed=args.seed, dt=args.dt)
    result = tune(swarm, fitness)
    out = _outdir(args.out)
    write_convergence_csv(result, out / f"{doc['name']}_convergence.csv", names)
    lines = [f"{n}={v:.9g}" for n, v in zip(names, result.best_position)]
    lines.append(f"best_fitness={result.best_fitness:.9g}")
    (out / f"{doc['name']}_gains.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def _selftest_checks():
    """Fast built-in checks; yields ``(label, passed)``."""
    from .controllers import ControllerSpec, control
    from .mpso import SwarmConfig, sphere, tune
    from .plants import Plant
    from .reaching import ReachingLawSpec
    from .sim import rk4_step
    from .surfaces import ErrorState, SurfaceGains

    x = [1.0]
    for i in range(100):
        x = rk4_step(lambda t, y: [-y[0]], x, i * 0.01, 0.01)
    yield "rk4 decay oracle", abs(x[0] - math.exp(-1)) < 1e-8

    best = tune(SwarmConfig(rng_seed=0), sphere).best_fitness
    yield "sphere swarm best < 1e-3", best < 1e-3

    rng = np.random.default_rng(0)
    plant = Plant("pendulum")
    spec = ControllerSpec("pid_smc", SurfaceGains(105, 4, 0.8),
                          ReachingLawSpec("power_rate_exponential", k=35, k_sc=1.5))
    worst = 0.0
    for _ in range(200):
        th, om, e_int, rdd = rng.uniform(-1, 1, 4)
        f, g = plant.decompose((th, om))
        err = ErrorState(-th, -om, e_int)
        out = control(spec, err, rdd, f, g)
        err.e_ddot = rdd - (f + g * out.u)
        s_dot = 4 * err.e + 105 * err.e_dot + 0.8 * err.e_ddot
        worst = max(worst, abs(s_dot - spec.law(out.s)) / max(1.0, abs(s_dot)))
    yield "PID-SMC surface identity", worst < 1e-9

    if BACKEND == "cython":
        from . import _kernel, _pykernel
        from .plants import DisturbanceSpec
        from .sim import Scenario
        sc = Scenario(plant, spec, (0.0, 0.0), 1.0, 0.01,
                      disturbance=DisturbanceSpec.scaled_impulse(1000, 10))
        a = _pykernel.run(*sc.encode())[0]
        b = _kernel.run(*sc.encode())[0]
        yield "compiled kernel matches Python", bool(np.allclose(a, b, rtol=1e-9, atol=1e-9))


def cmd_selftest(args) -> int:
    print(f"backend={BACKEND}")
    ok = True
    for label, passed in _selftest_checks():
        print(f"{'PASS' if passed else 'FAIL'} {label}")
        ok &= passed
    return EXIT_OK if ok else EXIT_ASSERT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smclab", description="Sliding-mode control simulation lab")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, needs_cfg in [("run", cmd_run, True), ("compare", cmd_compare, True),
                                ("tune", cmd_tune, True), ("selftest", cmd_selftest, False)]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_cfg,
                        help="config path or bundled name (" + ", ".join(cfgmod.bundled_names()) + ")")
        sp.add_argument("--out", default="." if name in ("run", "tune") else None,
                        help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed override for tuning")
        sp.add_argument("--dt", type=float, default=None, help="step size override (s)")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.dt is not None and not args.dt > 0:
        _err("--dt must be positive")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
