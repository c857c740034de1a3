"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import counterexample
from .errors import DegenerateBatch
from .falsifier import InstanceSpec, SearchConfig, TargetModel, search
from .objective import bn_cost, bn_cost_gradient, finite_diff_gradient, standard_cost

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GRADCHECK_TOL = 1e-5
LANDSCAPE_HEADER = ["w1", "w2", "cost_standard", "cost_bn"]


class UsageError(Exception):
    pass


def _dump_json(obj) -> str:
    # float repr is the shortest string that round-trips, so output is byte-stable
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_reproduce(args) -> int:
    report = counterexample.run_full_verification(counterexample.example_dataset())
    doc = report.to_dict()
    doc["display"] = report.display(4)
    _emit(_dump_json(doc), args.out)
    if report.verdict is not counterexample.Verdict.VIOLATED:
        print(f"verification failed at stage {report.failed_stage}: {report.failure}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def gradcheck_errors(trials: int, seed: int, data=None):
    """Relative errors between analytic and central-difference BN gradients at seeded random w."""
    data = counterexample.example_dataset() if data is None else data
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(trials):
        d = rng.standard_normal(data.dim)
        w = rng.uniform(0.5, 5.0) * d / np.linalg.norm(d)
        g = bn_cost_gradient(w, data)
        fd = finite_diff_gradient(lambda v: bn_cost(v, data), w)
        errs.append(float(np.linalg.norm(g - fd) / np.linalg.norm(g)))
    return errs


def cmd_gradcheck(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    errs = gradcheck_errors(args.trials, args.seed)
    worst = max(errs)
    ok = worst <= GRADCHECK_TOL
    doc = {"trials": args.trials, "seed": args.seed, "max_rel_err": worst,
           "tolerance": GRADCHECK_TOL, "passed": ok}
    _emit(_dump_json(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _axis(lo, hi, n):
    return np.array([lo]) if n == 1 else np.linspace(lo, hi, n)


def landscape_rows(w1_range, w2_range, n1, n2, data=None):
    data = counterexample.example_dataset() if data is None else data
    rows = []
    for a in _axis(*w1_range, n1):
        for b in _axis(*w2_range, n2):
            w = np.array([a, b])
            try:
                cbn = bn_cost(w, data)
            except DegenerateBatch:
                cbn = None
            rows.append((float(a), float(b), standard_cost(w, data), cbn))
    return rows


def cmd_landscape(args) -> int:
    for name, (lo, hi) in (("--w1", args.w1), ("--w2", args.w2)):
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise UsageError(f"{name} needs finite LO < HI, got {lo} {hi}")
    n1 = args.n if args.n1 is None else args.n1
    n2 = args.n if args.n2 is None else args.n2
    if n1 < 1 or n2 < 1:
        raise UsageError("grid resolution must be >= 1")
    rows = landscape_rows(args.w1, args.w2, n1, n2)
    if args.format == "json":
        text = _dump_json({"header": LANDSCAPE_HEADER, "rows": [list(r) for r in rows]})
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LANDSCAPE_HEADER)
        for a, b, cs, cbn in rows:
            writer.writerow([repr(a), repr(b), repr(cs), "" if cbn is None else repr(cbn)])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    try:
        config = SearchConfig(
            trials=1 if args.example1 else args.trials,
            restarts_per_instance=args.restarts,
            step_size=args.step_size,
            max_iters=args.max_iters,
            grad_tol=args.grad_tol,
            master_seed=args.seed,
        )
        template = InstanceSpec(
            p=args.p, N=args.n, input_range=tuple(args.input_range),
            target_model=args.target_model, noise_scale=args.noise,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    summary = search(config, template, threads=args.threads, example1=args.example1)
    doc = {
        "config": {
            "trials": config.trials,
            "restarts_per_instance": config.restarts_per_instance,
            "step_size": config.step_size,
            "max_iters": config.max_iters,
            "grad_tol": config.grad_tol,
            "master_seed": config.master_seed,
            "example1": args.example1,
        },
        "template": None if args.example1 else template.to_dict(),
        **summary.to_dict(),
    }
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


def _default_seed():
    raw = os.environ.get("BNF_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"BNF_SEED must be an integer, got {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("json",)):
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="seed (default: $BNF_SEED or 0)")
        p.add_argument("--format", choices=formats, default=formats[0])

    p = sub.add_parser("reproduce", help="verify the three-sample counterexample")
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference BN gradient")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("landscape", help="grid of standard and BN costs")
    common(p, formats=("csv", "json"))
    p.add_argument("--w1", type=float, nargs=2, metavar=("LO", "HI"), default=(-1.0, 6.0))
    p.add_argument("--w2", type=float, nargs=2, metavar=("LO", "HI"), default=(-1.0, 6.0))
    p.add_argument("--n", type=int, default=41, help="points per axis")
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--n2", type=int, default=None)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("search", help="randomized search for violating instances")
    common(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--input-range", type=float, nargs=2, default=(-3.0, 3.0), metavar=("LO", "HI"))
    p.add_argument("--target-model", choices=[m.value for m in TargetModel], default=TargetModel.QUADRATIC.value)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--step-size", type=float, default=1e-2)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--grad-tol", type=float, default=1e-9)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--example1", action="store_true", help="evaluate only the three-sample counterexample")
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        print(f"bnf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"bnf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
