"""Command-line entry point: simulate, solve, eval, sweep, and serve.

Exit codes are stable for scripting: 0 success, 2 usage or validation
failure, 3 I/O failure, 4 numerical degeneracy. Human-readable summaries go
to stdout as key=value lines; files carry the machine-readable truth. Seeds
are always explicit (no environment fallback), so identical invocations
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .bench import SweepConfig, SweepKind, run_sweep
from .errors import DegenerateMotionError, InvalidProblemError, ParseError
from .metrics import consistency_error, gt_error
from .model import (
    CalibrationProblem,
    Direction,
    load_ground_truth,
    load_problem,
    load_solution,
    save_ground_truth,
    save_problem,
    save_solution,
)
from .solver import relative_extrinsics, solve
from .synth import (
    MAX_NOISE_RATIO,
    NoiseConfig,
    RigConfig,
    generate_measurements,
    generate_rig,
    perturb,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigcal",
        description="Joint multi-camera / tracker extrinsic calibration toolkit",
    )
    parser.add_argument("--version", action="version", version=f"rigcal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic problem and its ground truth")
    p_sim.add_argument("--cameras", type=int, required=True, help="number of cameras (1-16)")
    p_sim.add_argument("--measurements", type=int, required=True, help="pose pairs per camera (>=3)")
    p_sim.add_argument("--noise", type=float, default=0.0, help="noise ratio in [0, 0.3]")
    p_sim.add_argument("--seed", type=int, required=True, help="RNG seed (non-negative)")
    p_sim.add_argument("--out", required=True, help="output problem file")
    p_sim.add_argument("--gt", required=True, help="output ground-truth file")

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("--in", dest="in_path", required=True, help="input problem file")
    p_solve.add_argument("--out", required=True, help="output solution file")
    p_solve.add_argument(
        "--direction",
        choices=[d.value for d in Direction],
        help="override the problem file's direction",
    )
    p_solve.add_argument("--reference", help="camera id; also write chained extrinsics to it")

    p_eval = sub.add_parser("eval", help="score a solution against a problem")
    p_eval.add_argument("--problem", required=True)
    p_eval.add_argument("--solution", required=True)
    p_eval.add_argument("--gt", help="optional ground-truth file for per-pose errors")

    p_sweep = sub.add_parser("sweep", help="run a benchmark sweep and write CSV")
    p_sweep.add_argument(
        "--kind", choices=[k.value for k in SweepKind], required=True, help="sweep variable"
    )
    p_sweep.add_argument("--trials", type=int, default=100)
    p_sweep.add_argument("--seed", type=int, required=True)
    p_sweep.add_argument("--out", required=True, help="output CSV file")
    p_sweep.add_argument(
        "--timing",
        action="store_true",
        help="measure per-solve wall time (makes the CSV nondeterministic)",
    )

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _require_seed(seed: int) -> int:
    if seed < 0:
        raise InvalidProblemError(f"seed must be non-negative, got {seed}")
    return seed


def _cmd_simulate(args: argparse.Namespace) -> int:
    if not 0.0 <= args.noise <= MAX_NOISE_RATIO:
        raise InvalidProblemError(
            f"noise ratio must be in [0, {MAX_NOISE_RATIO}], got {args.noise}"
        )
    seed = _require_seed(args.seed)
    config = RigConfig(camera_count=args.cameras, seed=seed)
    gt = generate_rig(config)
    problem = generate_measurements(
        gt, args.measurements, seed, distance_range=config.target_distance_range
    )
    if args.noise > 0.0:
        problem = perturb(problem, NoiseConfig(ratio=args.noise, seed=seed))
    save_problem(problem, args.out)
    save_ground_truth(gt, args.gt)
    print(f"cameras={args.cameras}")
    print(f"pairs={problem.n_pairs()}")
    print(f"out={args.out}")
    print(f"gt={args.gt}")
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    problem = load_problem(args.in_path)
    if args.direction is not None:
        problem = CalibrationProblem(
            cameras=problem.cameras, direction=Direction(args.direction)
        )
    solution = solve(problem)
    extrinsics = None
    if args.reference is not None:
        extrinsics = relative_extrinsics(solution, args.reference)
    save_solution(solution, args.out, relative_extrinsics=extrinsics)
    d = solution.diagnostics
    print(f"cameras={len(solution.x)}")
    print(f"smallest_singular_value={d.smallest_singular_value:.6e}")
    print(f"singular_value_ratio={d.smallest_singular_value / d.second_smallest:.6e}")
    print(f"rotation_residual_deg={d.rotation_residual_deg:.6f}")
    print(f"translation_residual_m={d.translation_residual_m:.6f}")
    print(f"out={args.out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    solution = load_solution(args.solution)
    report = consistency_error(problem, solution)
    print(f"e_rot_deg={report.e_rot:.6f}")
    print(f"e_trans_m={report.e_trans:.6f}")
    print(f"n_pairs={report.n_pairs}")
    for cid in sorted(report.per_camera):
        rot, trans = report.per_camera[cid]
        print(f"{cid}.e_rot_deg={rot:.6f}")
        print(f"{cid}.e_trans_m={trans:.6f}")
    if args.gt is not None:
        gt = load_ground_truth(args.gt)
        errors = gt_error(solution, gt)
        print(f"gt.y.rot_deg={errors.y[0]:.6f}")
        print(f"gt.y.trans_m={errors.y[1]:.6f}")
        for cid in sorted(errors.per_camera):
            rot, trans = errors.per_camera[cid]
            print(f"gt.{cid}.rot_deg={rot:.6f}")
            print(f"gt.{cid}.trans_m={trans:.6f}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.trials == 1:
        print("warning: averages over a single trial", file=sys.stderr)
    config = SweepConfig(
        kind=SweepKind(args.kind),
        seed=_require_seed(args.seed),
        trials=args.trials,
        measure_time=args.timing,
    )
    report = run_sweep(config)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    print(f"kind={config.kind.value}")
    print(f"rows={len(report.rows)}")
    print(f"out={args.out}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_HANDLERS = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except DegenerateMotionError as exc:
        print(f"error: degenerate motion: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, InvalidProblemError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
