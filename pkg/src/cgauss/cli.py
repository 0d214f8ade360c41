"""Command-line interface.

Subcommands: ``law``, ``sample``, ``verify``, ``lemma``, ``demo-credit``.
Exit codes: 0 success or pass, 1 internal error, 2 usage or validation error,
3 statistical verification failure.

Lists are comma separated. A list starting with a minus sign must be attached
with ``=`` (``--weights=-1,2``) so it is not mistaken for an option.
Indices (``--pivot``, ``--observed``) are 0-based.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import rng, structured
from .credit import CreditDemoConfig, run_credit_demo
from .errors import CGaussError, DegenerateRescale
from .law import ConditionalGaussian, condition_on_weighted_sum
from .sampler import METHODS, SampleBatch, iter_method
from .verifier import (
    COV_Z_THRESHOLD,
    MEAN_Z_THRESHOLD,
    compare,
    default_epsilon,
    moments_from_chunks,
    oracle_agreement,
    slice_oracle,
    timed,
)

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_STAT_FAIL = 0, 1, 2, 3

METHOD_NAMES = {
    "exact": "exact",
    "last-coord": "naive_last_coord",
    "rescale": "naive_rescale",
    "shift": "naive_shift",
}


class UsageError(Exception):
    pass


def parse_floats(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    if not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return values


def finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def count_arg(text: str) -> int:
    value = int(float(text))
    if value < 1 or value != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def seed_arg(text: str) -> int:
    try:
        return rng.check_seed(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser, formats=("json",)) -> None:
    p.add_argument("--seed", type=seed_arg, default=None, help="unsigned 64-bit seed; drawn from entropy and printed if absent")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--output", "-o", default=None, help="output path (default: stdout)")


def _constraint(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", type=parse_floats, required=True, help="comma-separated nonzero weights")
    p.add_argument("--c", type=finite_float, required=True, help="constraint value")
    p.add_argument("--pivot", type=int, default=None, help="eliminated coordinate (default: largest |w_i|)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgauss", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("law", help="closed-form conditional law as JSON")
    _constraint(p)
    _common(p)

    p = sub.add_parser("sample", help="draw constrained samples")
    _constraint(p)
    _common(p, formats=("csv", "binary", "json"))
    p.add_argument("-n", "--samples", type=count_arg, default=1000)
    p.add_argument("--method", choices=list(METHOD_NAMES), default="exact")
    p.add_argument("--space", choices=("z", "x"), default="z")

    p = sub.add_parser("verify", help="check the law against the dense and slice oracles")
    _constraint(p)
    _common(p)
    p.add_argument("--proposals", type=count_arg, default=10**7)
    p.add_argument("--epsilon", type=finite_float, default=None, help="slice half-width (default 0.02*|w|)")
    p.add_argument("--method", choices=list(METHOD_NAMES), default=None,
                   help="also compare a sampler batch against the law")
    p.add_argument("-n", "--samples", type=count_arg, default=10**6)
    p.add_argument("--mean-threshold", type=finite_float, default=MEAN_Z_THRESHOLD)
    p.add_argument("--cov-threshold", type=finite_float, default=COV_Z_THRESHOLD)
    p.add_argument("--timing", action="store_true", help="include wall times in the report")

    p = sub.add_parser("lemma", help="determinant and inverse of diag(a) + a0 * ones")
    p.add_argument("--a0", type=finite_float, required=True)
    p.add_argument("--diag", type=parse_floats, required=True)
    _common(p)

    p = sub.add_parser("demo-credit", help="one-factor credit model conditioned on an observed default boundary")
    p.add_argument("--loadings", type=parse_floats, required=True)
    p.add_argument("--thresholds", type=parse_floats, required=True)
    p.add_argument("--observed", type=int, default=0)
    p.add_argument("--boundary", type=finite_float, default=None, help="observed value of X_k (default: its threshold)")
    p.add_argument("-n", "--samples", type=count_arg, default=10**6)
    _common(p)
    return parser


def _seed(args) -> int:
    if args.seed is None:
        args.seed = rng.fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _emit_text(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _law(args) -> ConditionalGaussian:
    return condition_on_weighted_sum(args.weights, args.c, args.pivot)


def cmd_law(args) -> int:
    _emit_text(args, _law(args).to_json() + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    law = _law(args)
    seed = _seed(args)
    method = METHOD_NAMES[args.method]
    space = args.space.upper()
    if method == "naive_rescale" and law.c == 0:
        warnings.warn("rescale scheme with c = 0 maps every draw to the zero vector", DegenerateRescale)
    stats: dict = {}
    chunks = iter_method(method, law, args.samples, seed, space=space, stats=stats)
    header = ",".join(f"{space.lower()}{i + 1}" for i in range(law.n))
    worst = 0.0

    def track(block):
        nonlocal worst
        res = np.abs(block.sum(axis=1) - law.c) if space == "X" else np.abs(block @ law.weights.w - law.c)
        worst = max(worst, float(res.max()))
        return block

    if args.format == "csv":
        out = open(args.output, "w", encoding="utf-8", newline="\n") if args.output else sys.stdout
        try:
            out.write(header + "\n")
            for block in chunks:
                np.savetxt(out, track(block), fmt="%.17g", delimiter=",")
        finally:
            if args.output:
                out.close()
    else:
        points = np.concatenate([track(b) for b in chunks])
        batch = SampleBatch(points, method, seed, space, law.weights, law.c)
        if args.format == "binary":
            data = batch.to_binary()
            if args.output:
                with open(args.output, "wb") as fh:
                    fh.write(data)
            else:
                sys.stdout.buffer.write(data)
        else:
            _emit_text(args, _dumps({"columns": batch.header(), "method": method, "seed": seed,
                                     "points": points.tolist()}))
    print(f"max constraint residual: {worst:.3e}", file=sys.stderr)
    if stats.get("degenerate_redraws"):
        print(f"degenerate rescale redraws: {stats['degenerate_redraws']}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    law = _law(args)
    seed = _seed(args)
    eps = default_epsilon(law.weights) if args.epsilon is None else args.epsilon
    thresholds = {"mean_threshold": args.mean_threshold, "cov_threshold": args.cov_threshold}

    dense, dense_t = timed(oracle_agreement, law)
    emp, slice_t = timed(slice_oracle, law.weights, law.c, eps, args.proposals, seed)
    report = compare(law, emp, label="slice_oracle", metadata={"seed": seed}, **thresholds)
    report.wall_time = slice_t
    doc = {
        "law": law.to_dict(),
        "dense_oracle": dense,
        "slice_oracle": report.to_dict(args.timing),
    }
    doc["slice_oracle"]["metadata"]["acceptance_rate"] = emp.count / emp.proposals
    doc["slice_oracle"]["metadata"]["expected_acceptance_rate"] = emp.expected_acceptance
    if args.timing:
        doc["dense_oracle"]["wall_time_s"] = dense_t
    passed = dense["passed"] and report.passed

    if args.method is not None:
        method = METHOD_NAMES[args.method]
        space = "X" if method == "exact" else "Z"
        # distinct seed so the sampler batch is independent of the slice proposals
        sample_seed = (seed + 1) % 2**64
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateRescale)
            emp_s, t = timed(moments_from_chunks, iter_method(method, law, args.samples, sample_seed, space=space), space)
        rep = compare(law, emp_s, label=method, metadata={"seed": sample_seed}, **thresholds)
        rep.wall_time = t
        doc["sampler"] = rep.to_dict(args.timing)
        passed = passed and rep.passed

    doc["verdict"] = "pass" if passed else "fail"
    _emit_text(args, _dumps(doc))
    return EXIT_OK if passed else EXIT_STAT_FAIL


def cmd_lemma(args) -> int:
    A = structured.build(args.a0, args.diag)
    B = structured.inverse(A)
    logdet = structured.log_determinant(A)
    logdet_rec = structured.log_determinant_recursive(A)
    doc = {
        "a0": A.a0,
        "diag": [float(v) for v in A.diag],
        "log_determinant": logdet,
        "determinant": structured.determinant(A),
        "log_determinant_recursive": logdet_rec,
        "determinant_recursive": math.exp(logdet_rec) if logdet_rec < 709.0 else "inf",
        "inverse": B.dense().tolist(),
        "positive_definite": structured.is_positive_definite(A.a0, A.diag),
    }
    _emit_text(args, _dumps(doc))
    return EXIT_OK


def cmd_demo_credit(args) -> int:
    cfg = CreditDemoConfig(tuple(args.loadings), tuple(args.thresholds), args.observed, args.boundary)
    seed = _seed(args)
    doc = run_credit_demo(cfg, samples=args.samples, seed=seed)
    _emit_text(args, _dumps(doc))
    return EXIT_OK if doc["monte_carlo"]["passed"] else EXIT_STAT_FAIL


COMMANDS = {
    "law": cmd_law,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "lemma": cmd_lemma,
    "demo-credit": cmd_demo_credit,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except CGaussError as exc:
        print(f"cgauss {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001
        print(f"cgauss {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
