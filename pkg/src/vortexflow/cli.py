"""Command-line front end: run scenes, validate the falling cylinder, benchmark.

Exit codes: 0 success, 1 error (bad arguments, missing files), 2 validation
failure. Thread count comes from --threads, falling back to the
VORTEXFLOW_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="vortexflow",
                description="Vortex-in-cell bi-phase flow solver with rigid bodies")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scene file")
    run_p.add_argument("scene")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--dump-every", type=int, default=None)
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--deterministic", action="store_true", default=None)

    val_p = sub.add_parser("validate", help="run a built-in validation case")
    val_p.add_argument("case", choices=["cylinder"])
    val_p.add_argument("--resolution", type=int, choices=[128, 256, 300], default=256)
    val_p.add_argument("--out", default=None)
    val_p.add_argument("--threads", type=int, default=None)

    bench_p = sub.add_parser("bench", help="micro-benchmarks")
    bench_p.add_argument("target", choices=["poisson"])
    bench_p.add_argument("--n", type=int, default=256)
    return p


def _threads(arg) -> int:
    if arg is not None:
        return arg
    return int(os.environ.get("VORTEXFLOW_THREADS", "1"))


def _cmd_run(args) -> int:
    from . import report, scene_io, solver

    if not os.path.exists(args.scene):
        print(f"error: scene file not found: {args.scene}", file=sys.stderr)
        return 1
    with open(args.scene) as fp:
        try:
            cfg = scene_io.parse_scene(fp.read())
        except ValueError as exc:
            print(f"error: {args.scene}: {exc}", file=sys.stderr)
            return 1
    if args.dump_every is not None:
        cfg.dump_every = args.dump_every
    if args.deterministic:
        cfg.deterministic = True
    cfg.threads = _threads(args.threads)
    out = args.out if args.out else cfg.out_dir
    state, rows, _ = solver.run(cfg, out_dir=out)
    rep = solver.timing_report(state)
    report.plot_timing(rep, f"{out}/stage_timing.png")
    print(f"completed {state.step_index} steps to t={state.t:g}; "
          f"outputs in {out}/")
    for k, v in rep.items():
        print(f"  {k:>16s}  {v:6.2f} %")
    return 0


def _cmd_validate(args) -> int:
    from . import experiments, report, scene_io

    out = scene_io.ensure_dir(args.out if args.out else
                              f"out/validate_cylinder_{args.resolution}")
    res = experiments.run_falling_cylinder(args.resolution,
                                           threads=_threads(args.threads))
    lo, hi = experiments.PLATEAU_BAND[args.resolution]
    with open(f"{out}/v_y.csv", "w") as fp:
        fp.write("t,v_y\n")
        for t, v in zip(res.times, res.v_y):
            fp.write(f"{t:.17g},{v:.17g}\n")
    report.plot_body_velocity(res.times, res.v_y, res.plateau,
                              experiments.PLATEAU_TARGET, f"{out}/v_y.png")
    for t, snap in res.snapshots.items():
        report.plot_vorticity_isovalues(snap, f"{out}/vorticity_t{t:g}.png")
    verdict = "PASS" if res.passed else "FAIL"
    lines = [
        f"falling-cylinder validation, {args.resolution}x{args.resolution} grid",
        f"plateau v_y       = {res.plateau:.4f}",
        f"acceptance band   = [{lo}, {hi}] around {experiments.PLATEAU_TARGET}",
        f"symmetry defect   = {res.symmetry_defect:.4f} (t <= 0.5)",
        f"result            = {verdict}",
    ]
    with open(f"{out}/report.txt", "w") as fp:
        fp.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if res.passed else 2


def _cmd_bench(args) -> int:
    from .grid import GridSpec, ScalarField
    from .poisson import PoissonPlan, solve_stream

    n = args.n
    spec = GridSpec(2, (n, n), 1.0 / n)
    plan = PoissonPlan(spec)
    rng = np.random.default_rng(0)
    omega = ScalarField(spec, rng.standard_normal(spec.n))
    solve_stream(omega, plan)  # warm up transforms
    reps = max(3, int(2e6 / (n * n)))
    t0 = time.perf_counter()
    for _ in range(reps):
        solve_stream(omega, plan)
    dt = (time.perf_counter() - t0) / reps
    print(f"poisson {n}x{n}: {dt * 1e3:.3f} ms per solve ({reps} reps)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except (ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
