"""Command-line front end.

Subcommands: run, sweep, trajectory, cascade, oracle.  Output goes to
``--out`` (stdout when omitted).  Exit codes: 0 success, 2 usage error,
3 I/O error, 4 resource error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional, Sequence

from . import formats
from .cascade import CascadeParams, cascade_onset_probabilities, run_cascade
from .errors import EmptyConditionError, ParameterError, ResourceError
from .model import GameParams, run_game
from .montecarlo import GridSpec, Metric, sweep, trajectory
from .oracle import dp_cap, evolve, limit_rating, rating_bias
from .rng import MASK64, derive_stream

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_RESOURCE = 0, 2, 3, 4

REFERENCE_RHO_START = 0.500001
DEFAULT_HORIZON = 1000
DEFAULT_CASCADE_HORIZON = 20
DEFAULT_CHECKPOINTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)

FLAG_FOR_FIELD = {
    "alpha": "--alpha",
    "rho": "--rho",
    "horizon": "--horizon",
    "trials": "--trials",
    "reader_fraction": "--reader-fraction",
    "init_rating": "--init-rating",
    "init_weight": "--init-weight",
    "v_true": "--v-true",
    "checkpoints": "--checkpoints",
    "step": "--alpha/--rho step",
}


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return value


def _checkpoint_list(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, nargs="+", metavar="A", help="quality: value, or start stop step for sweeps")
    common.add_argument("--rho", type=float, nargs="+", metavar="R", help="signal accuracy: value, or start stop step for sweeps")
    common.add_argument("--horizon", type=int, default=None, help="consumers per game (default 1000; cascade 20)")
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--reader-fraction", type=float, default=1.0)
    common.add_argument("--init-rating", type=float, default=0.5)
    common.add_argument("--init-weight", type=float, default=0.0)
    common.add_argument("--seed", type=_u64, default=1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", type=Path, default=None)

    parser = argparse.ArgumentParser(prog="ratinggame", description="Sequential rating game simulator and exact oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="simulate one business and write its trace")

    p = sub.add_parser("sweep", parents=[common], help="estimate a metric over an (alpha, rho) grid")
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.DEATH_PROBABILITY.value)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trajectory", parents=[common], help="mean rating at checkpoints across trials")
    p.add_argument("--checkpoints", type=_checkpoint_list, default=None)
    p.add_argument("--per-trial", action="store_true", help="emit every trial's rating instead of summaries")

    p = sub.add_parser("cascade", parents=[common], help="information-cascade comparison runs")
    p.add_argument("--v-true", type=int, choices=(0, 1), default=1)

    sub.add_parser("oracle", parents=[common], help="exact DP values for one parameter point")
    return parser


def _single(values: Optional[Sequence[float]], default: float, flag: str) -> float:
    if values is None:
        return default
    if len(values) != 1:
        raise UsageError(f"argument {flag}: expected one value for this command, got {len(values)}")
    return values[0]


def _range(values: Optional[Sequence[float]], default, flag: str):
    if values is None:
        return default
    if len(values) == 1:
        return values[0], values[0], 1.0
    if len(values) == 3:
        return tuple(values)
    raise UsageError(f"argument {flag}: expected 1 or 3 values (start stop step), got {len(values)}")


def _horizon(args, default: int) -> int:
    return default if args.horizon is None else args.horizon


def _game_params(args, alpha_default=0.5, rho_default=0.8) -> GameParams:
    return GameParams(
        alpha=_single(args.alpha, alpha_default, "--alpha"),
        rho=_single(args.rho, rho_default, "--rho"),
        horizon=_horizon(args, DEFAULT_HORIZON),
        reader_fraction=args.reader_fraction,
        init_rating=args.init_rating,
        init_weight=args.init_weight,
    )


def _write(path: Optional[Path], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def sidecar_path(out: Path) -> Path:
    return out.with_suffix(".summary.json")


def cmd_run(args) -> int:
    params = _game_params(args)
    summary = run_game(params, derive_stream(args.seed, ()), keep_trace=True)
    if args.format == "json":
        _write(args.out, formats.trace_json(summary, args.seed, asdict(params)))
        return EXIT_OK
    _write(args.out, formats.trace_csv(summary))
    side = formats.dumps(formats.summary_dict(summary, args.seed))
    if args.out is None:
        sys.stderr.write(side)
    else:
        _write(sidecar_path(args.out), side)
    return EXIT_OK


def cmd_sweep(args) -> int:
    a0, a1, da = _range(args.alpha, (0.0, 1.0, 0.01), "--alpha")
    r0, r1, dr = _range(args.rho, (REFERENCE_RHO_START, 1.0, 0.01), "--rho")
    spec = GridSpec(
        alpha_start=a0, alpha_stop=a1, alpha_step=da,
        rho_start=r0, rho_stop=r1, rho_step=dr,
        trials=args.trials, horizon=_horizon(args, DEFAULT_HORIZON),
        reader_fraction=args.reader_fraction, metric=args.metric,
        init_rating=args.init_rating, init_weight=args.init_weight,
    )
    # Validate every cell's parameters up front so bad flags are usage errors.
    for a in spec.alphas:
        for r in spec.rhos:
            spec.params(a, r)
    result = sweep(spec, args.seed, workers=max(1, args.workers))
    text = formats.grid_json(result) if args.format == "json" else formats.grid_csv(result)
    _write(args.out, text)
    for err in result.errors:
        print(f"warning: cell ({err.alpha_index}, {err.rho_index}): {err.message}", file=sys.stderr)
    return EXIT_OK


def cmd_trajectory(args) -> int:
    params = _game_params(args)
    if args.checkpoints is None:
        checkpoints = sorted({c for c in DEFAULT_CHECKPOINTS if c <= params.horizon} | {params.horizon})
    else:
        checkpoints = args.checkpoints
    traj = trajectory(params, args.trials, checkpoints, args.seed)
    if args.format == "json":
        text = formats.trajectory_json(traj, args.seed, asdict(params), args.per_trial)
    else:
        text = formats.trajectory_csv(traj, args.per_trial)
    _write(args.out, text)
    return EXIT_OK


def cmd_cascade(args) -> int:
    params = CascadeParams(rho=_single(args.rho, 0.8, "--rho"), v_true=args.v_true,
                           horizon=_horizon(args, DEFAULT_CASCADE_HORIZON))
    if args.trials < 1:
        raise ParameterError(f"trials must be at least 1, got {args.trials}", "trials")
    runs = [run_cascade(params, derive_stream(args.seed, (t,))) for t in range(args.trials)]
    if args.format == "csv":
        rows = (
            (t, s.onset_index, s.kind.value, "".join(map(str, s.actions)), "".join(map(str, s.signals)))
            for t, s in enumerate(runs)
        )
        _write(args.out, formats.csv_text(["run", "onset_index", "kind", "actions", "signals"], rows))
        return EXIT_OK
    by3 = {"correct": 0, "incorrect": 0, "none": 0}
    for s in runs:
        key = s.kind.value if s.onset_index is not None and s.onset_index <= 3 else "none"
        by3[key] += 1
    correct, incorrect = cascade_onset_probabilities(params.rho)
    out = {
        "params": asdict(params),
        "seed": args.seed,
        "runs": args.trials,
        "onset_by_3": {k: v / args.trials for k, v in by3.items()},
        "closed_form_by_3": {"correct": correct, "incorrect": incorrect},
    }
    _write(args.out, formats.dumps(out))
    return EXIT_OK


def cmd_oracle(args) -> int:
    params = _game_params(args)
    if params.horizon > dp_cap():
        raise ResourceError(f"horizon {params.horizon} exceeds the DP cap of {dp_cap()} (set RATING_DP_CAP to raise it)")
    dist = evolve(params)
    unconditional = dist.expected_rating()
    try:
        conditional = dist.expected_rating(conditional_on_survival=True)
    except EmptyConditionError:
        conditional = None
    values = {
        "params": asdict(params),
        "horizon": params.horizon,
        "exact_death_probability": dist.death_probability(),
        "exact_expected_rating": unconditional,
        "exact_expected_rating_survivors": conditional,
        "exact_bias": rating_bias(unconditional, params.alpha),
        "limit_rating": limit_rating(params.alpha, params.rho),
        "mass_checksum": dist.checksum(),
    }
    if args.format == "json":
        _write(args.out, formats.dumps(values))
    else:
        scalars = [(k, v) for k, v in values.items() if k != "params"]
        _write(args.out, formats.csv_text(["quantity", "value"], ((k, formats.fmt(v)) for k, v in scalars)))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "trajectory": cmd_trajectory,
    "cascade": cmd_cascade,
    "oracle": cmd_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ratinggame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        flag = FLAG_FOR_FIELD.get(exc.field)
        where = f"argument {flag}: " if flag else ""
        parser.print_usage(sys.stderr)
        print(f"ratinggame: error: {where}{exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"ratinggame: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"ratinggame: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
