"""Command-line interface: ``mps-seqmodel <subcommand> ...``.

Exit status is 0 on success, 1 when an oracle check fails, 2 on usage
errors and 3 when a numerical contract is violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .errors import ContractViolation

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2, 3


def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive of b) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid range must be a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise argparse.ArgumentTypeError(f"bad grid range {text!r}")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 12) for i in range(count))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def parse_fix(text: str) -> tuple[int, int]:
    try:
        pos, bit = text.split("=")
        return int(pos), int(bit)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--fix expects POS=BIT, got {text!r}") from None


def parse_bond(text: str) -> int | None:
    if text.lower() in ("none", "inf", "unbounded"):
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--max-bond expects an integer or 'none', got {text!r}") from None


def _policy(args):
    from .trainer import TruncationPolicy
    return TruncationPolicy(max_bond=args.max_bond, cutoff=args.cutoff)


def _out(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    from .data import sample_training_set, save_dataset
    T = sample_training_set(args.n, args.fraction, args.seed, args.trial)
    if args.output:
        save_dataset(T, args.output)
    else:
        sys.stdout.write(f"N={T.n}\n" + "".join(s + "\n" for s in T.strings()))
    print(f"generated {T.n_t} even-parity strings of length {T.n}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    from .data import load_dataset
    from .mps import save_model
    from .trainer import train
    T = load_dataset(args.data)
    m, diag = train(T, _policy(args))
    save_model(m, args.output)
    if args.diagnostics:
        Path(args.diagnostics).write_text(json.dumps(diag.as_dict(), indent=1) + "\n")
    print(f"trained N={m.n} N_T={T.n_t} bonds={m.bonds} in {diag.elapsed:.3f}s", file=sys.stderr)
    for w in diag.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args) -> int:
    from .mps import load_model, sample_many, samples_to_strings
    m = load_model(args.model)
    constraints = {}
    for pos, bit in args.fix or []:
        if pos in constraints and constraints[pos] != bit:
            raise ContractViolation(f"position {pos} fixed to both {constraints[pos]} and {bit}")
        constraints[pos] = bit
    rows = sample_many(m, args.count, args.seed, constraints)
    _out(args, "".join(s + "\n" for s in samples_to_strings(rows)))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .mps import load_model, overlap, parity_target_mps
    from .theory import bhattacharya_distance
    m = load_model(args.model)
    if args.target != "parity":
        raise ContractViolation(f"unknown target {args.target!r}")
    ov = overlap(m, parity_target_mps(m.n)) / math.sqrt(m.norm_squared())
    dist = bhattacharya_distance(ov, args.distance, m.n)
    _out(args, f"overlap {ov!r}\ndistance {dist!r}\n")
    return EXIT_OK


def _calibration(args):
    if getattr(args, "calibration", None):
        from .theory import CalibrationTable
        return CalibrationTable.load(args.calibration)
    return None


def cmd_predict(args) -> int:
    from .theory import predict_curve
    points = predict_curve(args.n, args.grid, _calibration(args), args.distance)
    lines = ["f,N_T,overlap,distance"] + [f"{p.f!r},{p.n_t},{p.overlap!r},{p.distance!r}" for p in points]
    _out(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .checks import shape_verdict
    from .experiment import ExperimentConfig, emit_report, run_experiment
    cfg = ExperimentConfig(n=args.n, grid=args.grid, trials=args.trials, seed=args.seed,
                           policy=_policy(args), output=args.output, variant=args.distance,
                           calibration=_calibration(args))
    rec = run_experiment(cfg)
    paths = emit_report(rec, args.output)
    for p in paths.values():
        print(f"wrote {p}", file=sys.stderr)
    if rec.aggregates:
        ok, detail = shape_verdict(cfg.grid, [a.mean_distance for a in rec.aggregates],
                                   [a.std_distance for a in rec.aggregates],
                                   [a.theory.distance for a in rec.aggregates])
        print(f"shape {'PASS' if ok else 'FAIL'}: {detail}")
    failed = [r for r in rec.rows if r.error]
    for r in failed:
        print(f"row f={r.f} trial={r.trial}: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .checks import SUITE
    numbers = args.criteria or [i for i in sorted(SUITE) if i != 9 or args.sweep]
    all_ok = True
    for i in numbers:
        if i not in SUITE:
            raise ContractViolation(f"no criterion {i}")
        result = SUITE[i]()
        print(result.line(), flush=True)
        all_ok = all_ok and result.passed
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_calibrate(args) -> int:
    from .calibration import DEFAULT_GRID, calibrate_fit
    fit = calibrate_fit(args.n, args.grid or DEFAULT_GRID, args.runs, args.seed)
    table = fit.table
    if args.output:
        table.save(args.output, fit.header())
    else:
        for f, c in zip(table.fractions, table.factors):
            print(f"{float(f)!r},{float(c)!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mps-seqmodel", description="Train and analyse MPS sequence models.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def training_flags(sp):
        sp.add_argument("--max-bond", type=parse_bond, default=2, help="bond cap, or 'none' (default 2)")
        sp.add_argument("--cutoff", type=float, default=1e-10, help="relative eigenvalue cutoff")

    def distance_flag(sp):
        sp.add_argument("--distance", choices=("standard", "paper-literal"), default="standard")

    sp = sub.add_parser("generate", help="sample an even-parity training set")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--fraction", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trial", type=int, default=0)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("train", help="train a model from a dataset file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--diagnostics", help="write per-step diagnostics as JSON")
    training_flags(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sample", help="draw exact samples from a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fix", type=parse_fix, action="append", metavar="POS=BIT",
                    help="condition on a bit (1-based position); repeatable")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("evaluate", help="overlap and distance to a target")
    sp.add_argument("--model", required=True)
    sp.add_argument("--target", choices=("parity",), default="parity")
    distance_flag(sp)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("predict", help="theoretical distance curve")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--grid", type=parse_grid, required=True)
    sp.add_argument("--calibration", help="gap calibration table (default: shipped N=16 table)")
    distance_flag(sp)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("experiment", help="seeded sweep over training fractions")
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--grid", type=parse_grid, default=parse_grid("0.02:0.2:0.02"))
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--calibration")
    training_flags(sp)
    distance_flag(sp)
    sp.add_argument("--output", default="experiment", help="output prefix for the CSV files")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("oracle-check", help="run the equivalence suites and print PASS/FAIL")
    sp.add_argument("--criteria", type=lambda s: [int(x) for x in s.split(",")], help="e.g. 1,2,5")
    sp.add_argument("--sweep", action="store_true", help="also run the N=16 sweep (criterion 9)")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("calibrate", help="refit the gap multiplier table")
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--grid", type=parse_grid)
    sp.add_argument("--runs", type=int, default=50)
    sp.add_argument("--seed", type=int, default=20240601)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
